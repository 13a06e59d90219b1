//! Evaluation of superexpressions over a finite Grassmann algebra and RK4
//! integration of the Lagrangian dynamics.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, Mul, Sub};

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::algebra::{Coord, Rational, SuperExpr};
use crate::jet::Chart;
use crate::lagrangian::Dynamics;

/// Largest supported number of odd generators.
pub const MAX_GENERATORS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("no value for {coord}")]
    MissingValue { coord: Coord },
    #[error("value of {coord} has components of the wrong parity")]
    ParityViolation { coord: Coord },
    #[error("at most {MAX_GENERATORS} Grassmann generators are supported, got {n}")]
    TooManyGenerators { n: usize },
    #[error("Grassmann algebras differ in size ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error("step size must be positive and the end time nonnegative")]
    BadStep,
    #[error("non-finite value in {coord} at t = {t}")]
    NonFinite { coord: Coord, t: f64 },
    #[error("coefficient {0} is not representable as a float")]
    Unrepresentable(String),
}

/// Element of the real Grassmann algebra on `n` generators `η_1..η_n`.
/// Component `s` multiplies `η_{i_1}⋯η_{i_m}` where bit `i-1` of `s` marks `η_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannValue {
    n: usize,
    coeffs: Vec<f64>,
}

fn product_sign(a: usize, b: usize) -> f64 {
    // pairs (i in a, j in b) with i > j
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl GrassmannValue {
    pub fn zero(n: usize) -> Self {
        GrassmannValue { n, coeffs: vec![0.0; 1 << n] }
    }

    pub fn scalar(n: usize, v: f64) -> Self {
        let mut out = GrassmannValue::zero(n);
        out.coeffs[0] = v;
        out
    }

    /// `η_i` for `1 ≤ i ≤ n`.
    pub fn generator(n: usize, i: usize) -> Self {
        assert!((1..=n).contains(&i), "generator index out of range");
        let mut out = GrassmannValue::zero(n);
        out.coeffs[1 << (i - 1)] = 1.0;
        out
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self, NumericError> {
        if n > MAX_GENERATORS {
            return Err(NumericError::TooManyGenerators { n });
        }
        if coeffs.len() != 1 << n {
            return Err(NumericError::SizeMismatch { left: 1 << n, right: coeffs.len() });
        }
        Ok(GrassmannValue { n, coeffs })
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, subset: usize) -> f64 {
        self.coeffs[subset]
    }

    pub fn body(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn scale(&self, c: f64) -> Self {
        GrassmannValue { n: self.n, coeffs: self.coeffs.iter().map(|v| v * c).collect() }
    }

    /// Supported only on even-size subsets (`odd = false`) or odd-size ones.
    pub fn has_parity(&self, odd: bool) -> bool {
        self.coeffs.iter().enumerate().all(|(s, v)| *v == 0.0 || (s.count_ones() % 2 == 1) == odd)
    }

    pub fn sup_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|v| v.is_finite())
    }

    fn check_size(&self, other: &Self) {
        assert_eq!(self.n, other.n, "Grassmann algebras differ in size");
    }
}

impl Add for &GrassmannValue {
    type Output = GrassmannValue;
    fn add(self, rhs: &GrassmannValue) -> GrassmannValue {
        self.check_size(rhs);
        GrassmannValue { n: self.n, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &GrassmannValue {
    type Output = GrassmannValue;
    fn sub(self, rhs: &GrassmannValue) -> GrassmannValue {
        self.check_size(rhs);
        GrassmannValue { n: self.n, coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &GrassmannValue {
    type Output = GrassmannValue;
    fn mul(self, rhs: &GrassmannValue) -> GrassmannValue {
        self.check_size(rhs);
        let mut out = GrassmannValue::zero(self.n);
        for (a, x) in self.coeffs.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (b, y) in rhs.coeffs.iter().enumerate() {
                if *y == 0.0 || a & b != 0 {
                    continue;
                }
                out.coeffs[a | b] += product_sign(a, b) * x * y;
            }
        }
        out
    }
}

impl fmt::Display for GrassmannValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, v) in self.coeffs.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "{v}")?;
            for i in 0..self.n {
                if s & (1 << i) != 0 {
                    write!(f, "*eta{}", i + 1)?;
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Values of jet coordinates in a Grassmann algebra with `n` generators.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericState {
    n: usize,
    values: BTreeMap<Coord, GrassmannValue>,
}

impl NumericState {
    pub fn new(n: usize) -> Result<Self, NumericError> {
        if n > MAX_GENERATORS {
            return Err(NumericError::TooManyGenerators { n });
        }
        Ok(NumericState { n, values: BTreeMap::new() })
    }

    /// All coordinates of `chart` set to zero.
    pub fn zeros(chart: &Chart, n: usize) -> Result<Self, NumericError> {
        let mut s = NumericState::new(n)?;
        for c in chart.coords() {
            s.values.insert(c, GrassmannValue::zero(n));
        }
        Ok(s)
    }

    pub fn generators(&self) -> usize {
        self.n
    }

    pub fn set(&mut self, c: Coord, v: GrassmannValue) -> Result<(), NumericError> {
        if v.n != self.n {
            return Err(NumericError::SizeMismatch { left: self.n, right: v.n });
        }
        if !v.has_parity(c.is_odd()) {
            return Err(NumericError::ParityViolation { coord: c });
        }
        self.values.insert(c, v);
        Ok(())
    }

    pub fn get(&self, c: Coord) -> Option<&GrassmannValue> {
        self.values.get(&c)
    }

    pub fn values(&self) -> impl Iterator<Item = (&Coord, &GrassmannValue)> {
        self.values.iter()
    }

    pub fn check_parity(&self) -> Result<(), NumericError> {
        match self.values.iter().find(|(c, v)| !v.has_parity(c.is_odd())) {
            Some((c, _)) => Err(NumericError::ParityViolation { coord: *c }),
            None => Ok(()),
        }
    }

    fn axpy(&self, h: f64, k: &BTreeMap<Coord, GrassmannValue>) -> NumericState {
        let mut out = self.clone();
        for (c, v) in out.values.iter_mut() {
            if let Some(d) = k.get(c) {
                *v = &*v + &d.scale(h);
            }
        }
        out
    }
}

pub fn rational_to_f64(r: &Rational) -> Result<f64, NumericError> {
    r.to_f64().filter(|v| v.is_finite()).ok_or_else(|| NumericError::Unrepresentable(r.to_string()))
}

/// Homomorphic evaluation of `e` at `state`.
pub fn evaluate(e: &SuperExpr, state: &NumericState) -> Result<GrassmannValue, NumericError> {
    state.check_parity()?;
    evaluate_unchecked(e, state)
}

fn evaluate_unchecked(e: &SuperExpr, state: &NumericState) -> Result<GrassmannValue, NumericError> {
    let n = state.n;
    let mut out = GrassmannValue::zero(n);
    for (m, c) in e.terms() {
        let mut term = GrassmannValue::scalar(n, rational_to_f64(c)?);
        for x in m.coords() {
            let v = state.values.get(&x).ok_or(NumericError::MissingValue { coord: x })?;
            for _ in 0..m.exponent(x) {
                term = &term * v;
            }
        }
        out = &out + &term;
    }
    Ok(out)
}

/// Sampled solution of `Γ`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<NumericState>,
    /// Largest sup-norm violation of the prolonged constraints along the run.
    pub constraint_violation: f64,
}

impl Trajectory {
    pub fn last(&self) -> &NumericState {
        self.states.last().expect("trajectory has at least one state")
    }

    /// Rows `t,coordinate,subset,coefficient`.
    pub fn export_csv<W: Write>(&self, chart: &Chart, mut out: W) -> io::Result<()> {
        writeln!(out, "t,coordinate,subset,coefficient")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            for (c, v) in s.values() {
                for (subset, coeff) in v.coeffs().iter().enumerate() {
                    writeln!(out, "{t},{},{subset},{coeff:e}", chart.name(*c))?;
                }
            }
        }
        Ok(())
    }
}

fn constraint_violation(dynamics: &Dynamics, s: &NumericState) -> Result<f64, NumericError> {
    let mut worst: f64 = 0.0;
    for (c, v) in dynamics.constraints() {
        let target = evaluate_unchecked(v, s)?;
        let current = s.get(*c).ok_or(NumericError::MissingValue { coord: *c })?;
        worst = worst.max((current - &target).sup_norm());
    }
    Ok(worst)
}

fn rates(dynamics: &Dynamics, s: &NumericState) -> Result<BTreeMap<Coord, GrassmannValue>, NumericError> {
    let top = dynamics.order();
    let mut out = BTreeMap::new();
    for c in s.values.keys() {
        let v = if c.order < top {
            let next = c.raised(1);
            s.get(next).cloned().ok_or(NumericError::MissingValue { coord: next })?
        } else {
            match dynamics.forces().get(&c.raised(1)) {
                Some(f) => evaluate_unchecked(f, s)?,
                None => GrassmannValue::zero(s.n),
            }
        };
        out.insert(*c, v);
    }
    Ok(out)
}

/// Classical RK4 on every Grassmann component. Coordinates of the phase
/// space missing from `s0` start at zero; constrained coordinates are reset
/// to their constraint values before the first step.
pub fn integrate(dynamics: &Dynamics, s0: &NumericState, dt: f64, t_end: f64) -> Result<Trajectory, NumericError> {
    if !(dt > 0.0 && t_end >= 0.0 && dt.is_finite() && t_end.is_finite()) {
        return Err(NumericError::BadStep);
    }
    let mut s = NumericState::zeros(dynamics.chart(), s0.n)?;
    for (c, v) in s0.values() {
        if c.order <= dynamics.order() {
            s.set(*c, v.clone())?;
        }
    }
    for (c, v) in dynamics.constraints() {
        let value = evaluate_unchecked(v, &s)?;
        s.set(*c, value)?;
    }
    s.check_parity()?;

    let steps = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut violation = constraint_violation(dynamics, &s)?;
    times.push(0.0);
    states.push(s.clone());
    for i in 1..=steps {
        let k1 = rates(dynamics, &s)?;
        let k2 = rates(dynamics, &s.axpy(dt / 2.0, &k1))?;
        let k3 = rates(dynamics, &s.axpy(dt / 2.0, &k2))?;
        let k4 = rates(dynamics, &s.axpy(dt, &k3))?;
        for (c, v) in s.values.iter_mut() {
            let incr = &(&(&k1[c] + &k2[c].scale(2.0)) + &k3[c].scale(2.0)) + &k4[c];
            *v = &*v + &incr.scale(dt / 6.0);
            if !v.is_finite() {
                return Err(NumericError::NonFinite { coord: *c, t: i as f64 * dt });
            }
        }
        violation = violation.max(constraint_violation(dynamics, &s)?);
        times.push(i as f64 * dt);
        states.push(s.clone());
    }
    Ok(Trajectory { times, states, constraint_violation: violation })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Drift {
    pub name: String,
    /// `max_t |Q(t) - Q(0)|` in the sup-norm over Grassmann components.
    pub drift: f64,
    pub initial: GrassmannValue,
}

pub fn conservation_report(traj: &Trajectory, quantities: &[(String, SuperExpr)]) -> Result<Vec<Drift>, NumericError> {
    let mut out = Vec::with_capacity(quantities.len());
    for (name, q) in quantities {
        let initial = evaluate(q, &traj.states[0])?;
        let mut drift: f64 = 0.0;
        for s in &traj.states[1..] {
            drift = drift.max((&evaluate_unchecked(q, s)? - &initial).sup_norm());
        }
        out.push(Drift { name: name.clone(), drift, initial });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use crate::lagrangian::{LagrangianSystem, SuperLagrangian};

    fn eta(n: usize, i: usize) -> GrassmannValue {
        GrassmannValue::generator(n, i)
    }

    #[test]
    fn generators_anticommute() {
        let ab = &eta(3, 1) * &eta(3, 2);
        let ba = &eta(3, 2) * &eta(3, 1);
        assert_eq!(ab, ba.scale(-1.0));
        assert_eq!((&eta(3, 2) * &eta(3, 2)).sup_norm(), 0.0);
        let abc = &(&eta(3, 3) * &eta(3, 1)) * &eta(3, 2);
        assert_eq!(abc.coeff(0b111), 1.0);
    }

    #[test]
    fn evaluation_examples() {
        let t0 = Coord::odd(0, 0);
        let t1 = Coord::odd(0, 1);
        let mut s = NumericState::new(2).unwrap();
        s.set(t0, eta(2, 1).scale(2.0)).unwrap();
        assert_eq!(evaluate(&SuperExpr::var(t0), &s).unwrap(), eta(2, 1).scale(2.0));
        s.set(t0, eta(2, 1)).unwrap();
        s.set(t1, eta(2, 2)).unwrap();
        let prod = &SuperExpr::var(t0) * &SuperExpr::var(t1);
        assert_eq!(evaluate(&prod, &s).unwrap(), &eta(2, 1) * &eta(2, 2));
        s.set(t1, eta(2, 1)).unwrap();
        assert_eq!(evaluate(&prod, &s).unwrap().sup_norm(), 0.0);
        assert_eq!(
            evaluate(&SuperExpr::var(Coord::even(0, 0)), &s),
            Err(NumericError::MissingValue { coord: Coord::even(0, 0) })
        );
        assert_eq!(
            s.set(Coord::even(0, 0), eta(2, 1)),
            Err(NumericError::ParityViolation { coord: Coord::even(0, 0) })
        );
    }

    fn dynamics(k: u16, e: SuperExpr) -> Dynamics {
        let chart = Chart::new(vec!["q".into()], vec![], k);
        LagrangianSystem::new(SuperLagrangian::new(chart, e).unwrap()).unwrap().solve_dynamics().unwrap()
    }

    #[test]
    fn oscillator_matches_cosine() {
        let q0 = SuperExpr::var(Coord::even(0, 0));
        let q1 = SuperExpr::var(Coord::even(0, 1));
        let l = &q1.pow(2).scale(&rat(1, 2)) - &q0.pow(2).scale(&rat(1, 2));
        let d = dynamics(1, l);
        let mut s = NumericState::new(0).unwrap();
        s.set(Coord::even(0, 0), GrassmannValue::scalar(0, 1.0)).unwrap();
        let traj = integrate(&d, &s, 1e-3, 1.0).unwrap();
        let end = traj.last().get(Coord::even(0, 0)).unwrap().body();
        assert!((end - 1f64.cos()).abs() < 1e-8);
        let report = conservation_report(&traj, &[("q".into(), q0)]).unwrap();
        assert!(report[0].drift > 0.4);
    }

    #[test]
    fn export_rows() {
        let q1 = SuperExpr::var(Coord::even(0, 1));
        let d = dynamics(1, q1.pow(2));
        let s = NumericState::new(1).unwrap();
        let traj = integrate(&d, &s, 0.5, 1.0).unwrap();
        let mut buf = Vec::new();
        traj.export_csv(d.chart(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 2 * 2);
        assert!(text.lines().nth(1).unwrap().starts_with("0,q[0],0,"));
    }
}
