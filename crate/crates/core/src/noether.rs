//! Symmetries and constants of motion: exactness of `X^(k)L`, charges from
//! symmetries, and symmetries recovered from conserved charges.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{AlgebraError, Coord, Parity, Rational, SuperExpr};
use crate::forms::{pair, FormError};
use crate::jet::{lift_vector_field, total_derivative, JetError, VectorFieldAlong};
use crate::lagrangian::{Dynamics, LagrangianSystem, PipelineError, Regularity};
use crate::linalg::{solve_rational, Row};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NoetherError {
    /// `X^(k)L` is not a total derivative. `coord` names the base coordinate
    /// whose variational derivative `certificate` is nonzero; `None` means
    /// the obstruction is a leftover of order zero, e.g. a constant.
    #[error("not a symmetry: variational derivative {certificate} does not vanish")]
    NotSymmetry { coord: Option<Coord>, certificate: SuperExpr },
    #[error("charge depends on coordinates of order {order}, beyond the phase space")]
    NotProjectable { order: u16 },
    #[error("no witness field of degree at most {max_degree}")]
    NoWitness { max_degree: u32 },
    #[error("charge is not homogeneous in parity")]
    MixedParity,
    #[error("field must be defined on base coordinates with components of order at most {limit}")]
    BadField { limit: u16 },
    #[error("internal consistency check failed: {0}")]
    VerificationFailed(&'static str),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// `(X, F, G)` with `X^(k)L = T F` and `G` conserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NoetherCertificate {
    pub field: VectorFieldAlong,
    pub f: SuperExpr,
    pub charge: SuperExpr,
}

/// Bounds for the polynomial ansatz of the witness search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WitnessConfig {
    /// Maximum total degree of the components; `None` means
    /// `degree(G) + 2k`.
    pub max_degree: Option<u32>,
}

/// `Σ_j (-T)^j ∂V/∂x_j` for a base coordinate `x`.
pub fn variational_derivative(v: &SuperExpr, x: Coord) -> SuperExpr {
    let top = v.max_order().unwrap_or(0);
    let mut out = SuperExpr::zero();
    for j in (0..=top).rev() {
        // Horner form of Σ_j (-T)^j a_j
        out = &v.left_partial(x.at_order(j)) - &total_derivative(&out);
    }
    out
}

/// Find `H` with `T H = v`, normalized to have no constant term.
pub fn integrate_total(v: &SuperExpr) -> Result<SuperExpr, NoetherError> {
    for x in base_coords_of(v) {
        let e = variational_derivative(v, x);
        if !e.is_zero() {
            return Err(NoetherError::NotSymmetry { coord: Some(x), certificate: e });
        }
    }
    let mut rest = v.clone();
    let mut h_total = SuperExpr::zero();
    while !rest.is_zero() {
        let top = match rest.max_order() {
            Some(r) if r > 0 => r,
            _ => return Err(NoetherError::NotSymmetry { coord: None, certificate: rest }),
        };
        let tops: Vec<Coord> = rest.coords().into_iter().filter(|c| c.order == top).collect();
        let mut lowered = SuperExpr::zero();
        for c in &tops {
            let a = rest.left_partial(*c);
            if tops.iter().any(|d| !a.left_partial(*d).is_zero()) {
                return Err(NoetherError::NotSymmetry { coord: None, certificate: rest });
            }
            lowered += &SuperExpr::var(c.at_order(top - 1)) * &a;
        }
        let mut h = SuperExpr::zero();
        for (m, coeff) in lowered.terms() {
            let deg: u32 = m.coords().filter(|c| c.order == top - 1).map(|c| m.exponent(c)).sum();
            h.add_term(m.clone(), coeff / Rational::from_integer(deg.into()));
        }
        rest -= &total_derivative(&h);
        if rest.coords().iter().any(|c| c.order >= top) {
            return Err(NoetherError::NotSymmetry { coord: None, certificate: rest });
        }
        h_total += h;
    }
    if total_derivative(&h_total) != *v {
        return Err(NoetherError::VerificationFailed("inverse total derivative does not reproduce its input"));
    }
    Ok(h_total)
}

fn base_coords_of(v: &SuperExpr) -> Vec<Coord> {
    let mut out: Vec<Coord> = v.coords().into_iter().map(|c| c.at_order(0)).collect();
    out.sort();
    out.dedup();
    out
}

/// Bring a user field to the form along `τ_{2k-1,0}`.
fn normalize_field(system: &LagrangianSystem, x: &VectorFieldAlong) -> Result<VectorFieldAlong, NoetherError> {
    let limit = 2 * system.order() - 1;
    if x.source_order != 0 || x.target_order > limit {
        return Err(NoetherError::BadField { limit });
    }
    for (c, _) in x.components() {
        if !system.chart().is_declared(*c) {
            return Err(NoetherError::Jet(JetError::Algebra(AlgebraError::UndeclaredGenerator { coord: *c })));
        }
    }
    Ok(x.widen_target(limit)?)
}

/// `X^(k) L`.
pub fn lifted_action(system: &LagrangianSystem, x: &VectorFieldAlong) -> Result<SuperExpr, NoetherError> {
    let x = normalize_field(system, x)?;
    Ok(lift_vector_field(&x, system.order())?.apply(system.lagrangian().expr())?)
}

/// Decide whether `X^(k)L = T F` and return `F`.
pub fn check_symmetry(system: &LagrangianSystem, x: &VectorFieldAlong) -> Result<SuperExpr, NoetherError> {
    integrate_total(&lifted_action(system, x)?)
}

/// `G = ⟨X^(k-1), Θ̌_L⟩ - F`, required to live on `T^{2k-1}`.
pub fn noether_charge(
    system: &LagrangianSystem,
    x: &VectorFieldAlong,
    f: &SuperExpr,
) -> Result<SuperExpr, NoetherError> {
    let x = normalize_field(system, x)?;
    let lifted = lift_vector_field(&x, system.order() - 1)?;
    let g = &pair(&lifted, system.theta_check())? - f;
    let limit = 2 * system.order() - 1;
    if let Some(order) = g.max_order().filter(|o| *o > limit) {
        return Err(NoetherError::NotProjectable { order });
    }
    if system.regularity().verdict == Regularity::Regular {
        let dynamics = system.solve_dynamics()?;
        if !check_constant_of_motion(&g, &dynamics)? {
            return Err(NoetherError::VerificationFailed("derived charge is not conserved"));
        }
    }
    Ok(g)
}

/// `Γ(G) = 0` on the constraint surface.
pub fn check_constant_of_motion(g: &SuperExpr, dynamics: &Dynamics) -> Result<bool, NoetherError> {
    Ok(dynamics.apply(g)?.is_zero())
}

/// Symmetry, its `F`, and its conserved charge.
pub fn certify_symmetry(system: &LagrangianSystem, x: &VectorFieldAlong) -> Result<NoetherCertificate, NoetherError> {
    let f = check_symmetry(system, x)?;
    let charge = noether_charge(system, x, &f)?;
    Ok(NoetherCertificate { field: normalize_field(system, x)?, f, charge })
}

/// All monomials in `coords` of total degree exactly `d` with the given parity.
fn monomials(coords: &[Coord], d: u32, parity: Parity) -> Vec<SuperExpr> {
    fn go(coords: &[Coord], d: u32, acc: SuperExpr, odd: bool, want: bool, out: &mut Vec<SuperExpr>) {
        if d == 0 {
            if odd == want {
                out.push(acc);
            }
            return;
        }
        let Some((first, rest)) = coords.split_first() else { return };
        let max = if first.is_odd() { 1 } else { d };
        let mut power = acc;
        for e in 0..=max {
            if e > 0 {
                power = &power * &SuperExpr::var(*first);
            }
            go(rest, d - e, power.clone(), odd ^ (first.is_odd() && e == 1), want, out);
        }
    }
    let mut out = Vec::new();
    go(coords, d, SuperExpr::one(), false, parity.is_odd(), &mut out);
    out
}

/// Solve `T G = -⟨X, δ̌L⟩` for a field `X` along `τ_{2k-1,0}` whose
/// components are polynomials of bounded degree, lowest degree first.
pub fn symmetry_from_charge(
    system: &LagrangianSystem,
    g: &SuperExpr,
    config: WitnessConfig,
) -> Result<VectorFieldAlong, NoetherError> {
    let k = system.order();
    let limit = 2 * k - 1;
    let chart = system.chart().with_order(limit);
    chart.check(g)?;
    let parity = if g.is_zero() { Parity::Even } else { g.parity_of().map_err(|_| NoetherError::MixedParity)? };
    let coords = chart.coords_up_to(limit);
    let base = chart.base_coords();
    let max_degree = config.max_degree.unwrap_or(g.degree() + 2 * k as u32);
    let target = -&total_derivative(g);

    let mut ansatz: Vec<(Coord, SuperExpr)> = Vec::new();
    for d in 0..=max_degree {
        for x in &base {
            for m in monomials(&coords, d, x.parity + parity) {
                ansatz.push((*x, m));
            }
        }
        // each unknown contributes twist(E_x) * m
        let mut rows: BTreeMap<_, Row> = BTreeMap::new();
        for (i, (x, m)) in ansatz.iter().enumerate() {
            let e = system.euler_lagrange(*x).twist(parity);
            for (mono, c) in (&e * m).terms() {
                rows.entry(mono.clone()).or_default().insert(i, c.clone());
            }
        }
        for (mono, _) in target.terms() {
            rows.entry(mono.clone()).or_default();
        }
        let (keys, rows): (Vec<_>, Vec<Row>) = rows.into_iter().unzip();
        let rhs: Vec<Rational> = keys.iter().map(|m| target.coefficient(m)).collect();
        if let Some(sol) = solve_rational(rows, rhs, ansatz.len()) {
            let mut field = VectorFieldAlong::new(0, limit, parity);
            let mut comps: BTreeMap<Coord, SuperExpr> = BTreeMap::new();
            for ((x, m), c) in ansatz.iter().zip(sol) {
                *comps.entry(*x).or_default() += m.scale(&c);
            }
            for (x, v) in comps {
                field.set(x, v)?;
            }
            return Ok(field);
        }
    }
    Err(NoetherError::NoWitness { max_degree })
}

/// From a conserved `G`, a symmetry `X` and its `F` satisfying `X^(k)L = T F`.
pub fn noether_inverse(
    system: &LagrangianSystem,
    g: &SuperExpr,
    config: WitnessConfig,
) -> Result<NoetherCertificate, NoetherError> {
    let field = symmetry_from_charge(system, g, config)?;
    let lifted = lift_vector_field(&field, system.order() - 1)?;
    let f = &pair(&lifted, system.theta_check())? - g;
    if lifted_action(system, &field)? != total_derivative(&f) {
        return Err(NoetherError::VerificationFailed("recovered symmetry does not satisfy X^(k)L = T F"));
    }
    if noether_charge(system, &field, &f)? != *g {
        return Err(NoetherError::VerificationFailed("charge re-derivation differs"));
    }
    Ok(NoetherCertificate { field, f, charge: g.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;
    use crate::jet::Chart;
    use crate::lagrangian::SuperLagrangian;

    fn q(j: u16) -> SuperExpr {
        SuperExpr::var(Coord::even(0, j))
    }
    fn th(j: u16) -> SuperExpr {
        SuperExpr::var(Coord::odd(0, j))
    }
    fn half(e: SuperExpr) -> SuperExpr {
        e.scale(&rat(1, 2))
    }
    fn system(k: u16, odd: bool, e: SuperExpr) -> LagrangianSystem {
        let odd = if odd { vec!["theta".to_string()] } else { vec![] };
        LagrangianSystem::new(SuperLagrangian::new(Chart::new(vec!["q".into()], odd, k), e).unwrap()).unwrap()
    }
    fn field(k: u16, parity: Parity, comps: &[(Coord, SuperExpr)]) -> VectorFieldAlong {
        let mut x = VectorFieldAlong::new(0, 2 * k - 1, parity);
        for (c, v) in comps {
            x.set(*c, v.clone()).unwrap();
        }
        x
    }
    fn superparticle() -> LagrangianSystem {
        system(1, true, &half(q(1).pow(2)) + &half(&th(0) * &th(1)))
    }

    #[test]
    fn variational_derivative_of_total_derivative_vanishes() {
        let h = &(&q(0) * &th(1)) * &th(0);
        let v = total_derivative(&h);
        assert!(variational_derivative(&v, Coord::even(0, 0)).is_zero());
        assert!(variational_derivative(&v, Coord::odd(0, 0)).is_zero());
        assert_eq!(variational_derivative(&q(1).pow(2), Coord::even(0, 0)), q(2).scale(&rat(-2, 1)));
    }

    #[test]
    fn integrate_total_inverts() {
        let h = &(&q(1).pow(2) * &th(0)) + &q(0).pow(3);
        assert_eq!(integrate_total(&total_derivative(&h)).unwrap(), h);
        assert!(matches!(integrate_total(&SuperExpr::one()), Err(NoetherError::NotSymmetry { coord: None, .. })));
    }

    #[test]
    fn translation_on_free_particle() {
        let s = system(1, false, half(q(1).pow(2)));
        let x = field(1, Parity::Even, &[(Coord::even(0, 0), SuperExpr::one())]);
        let cert = certify_symmetry(&s, &x).unwrap();
        assert!(cert.f.is_zero());
        assert_eq!(cert.charge, q(1));
    }

    #[test]
    fn ostrogradski_momentum() {
        let s = system(2, false, half(q(2).pow(2)));
        let x = field(2, Parity::Even, &[(Coord::even(0, 0), SuperExpr::one())]);
        assert_eq!(certify_symmetry(&s, &x).unwrap().charge, -q(3));
    }

    #[test]
    fn scaling_is_not_a_symmetry() {
        let s = system(1, false, half(q(1).pow(2)));
        let x = field(1, Parity::Even, &[(Coord::even(0, 0), q(0))]);
        match check_symmetry(&s, &x) {
            Err(NoetherError::NotSymmetry { coord, certificate }) => {
                assert_eq!(coord, Some(Coord::even(0, 0)));
                assert_eq!(certificate, q(2).scale(&rat(-2, 1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn supersymmetry_charge() {
        let s = superparticle();
        let x = field(1, Parity::Odd, &[(Coord::even(0, 0), th(0)), (Coord::odd(0, 0), -q(1))]);
        let cert = certify_symmetry(&s, &x).unwrap();
        assert_eq!(cert.f, half(&q(1) * &th(0)));
        assert_eq!(cert.charge, &q(1) * &th(0));
        let unsigned = field(1, Parity::Odd, &[(Coord::even(0, 0), th(0)), (Coord::odd(0, 0), q(1))]);
        assert!(matches!(check_symmetry(&s, &unsigned), Err(NoetherError::NotSymmetry { .. })));
    }

    #[test]
    fn witness_examples() {
        let s = system(1, false, half(q(1).pow(2)));
        let x = symmetry_from_charge(&s, &q(1), WitnessConfig::default()).unwrap();
        assert_eq!(x.component(Coord::even(0, 0)), SuperExpr::one());
        assert!(matches!(
            symmetry_from_charge(&s, &q(0), WitnessConfig::default()),
            Err(NoetherError::NoWitness { .. })
        ));
        assert!(symmetry_from_charge(&s, &SuperExpr::zero(), WitnessConfig::default()).unwrap().is_zero());
    }

    #[test]
    fn inverse_round_trips() {
        let osc = system(1, false, &half(q(1).pow(2)) - &half(q(0).pow(2)));
        let e = osc.data().energy.clone();
        let cert = noether_inverse(&osc, &e, WitnessConfig::default()).unwrap();
        assert_eq!(cert.charge, e);

        let sp = superparticle();
        let g = &q(1) * &th(0);
        let cert = noether_inverse(&sp, &g, WitnessConfig::default()).unwrap();
        assert_eq!(certify_symmetry(&sp, &cert.field).unwrap().charge, g);
    }
}
