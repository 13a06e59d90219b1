//! Bigraded exterior calculus on the jet charts.
//!
//! A term is stored as `coefficient ∧ dx_1 ∧ ... ∧ dx_p` with the coefficient
//! on the left and the differentials sorted. Each `dx` has bidegree
//! `(1, |x|)` and forms obey `α∧β = (-1)^{pq+ab} β∧α`, so even differentials
//! anticommute while odd differentials commute. Moving a function `g` past a
//! block of differentials of total parity `a` costs `g.twist(a)`.
//!
//! Conventions: `d` acts from the left with `df = Σ dx ∂f/∂x` (left
//! partials), interior products are left contractions with
//! `i_X(f dx) = (-1)^{|X||f|} f X(x)`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;
use thiserror::Error;

use crate::algebra::{fmt_rational, int, AlgebraError, Coord, Parity, Rational, SuperExpr};
use crate::jet::{total_derivative, JetError, Projection, VectorFieldAlong};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("differential d{coord} lies outside the domain of the field")]
    DomainMismatch { coord: Coord },
    #[error("form is not semibasic: it contains d{coord}")]
    NotSemibasic { coord: Coord },
    #[error("expected a form of degree {expected}, found degree {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("form uses order {found} but order {limit} was expected")]
    OrderExceeded { found: u16, limit: u16 },
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Sort a wedge of differentials; `None` if it vanishes (a repeated even
/// differential), otherwise the sign flag.
fn canonical_wedge(mut v: Vec<Coord>) -> Option<(bool, Vec<Coord>)> {
    let mut negative = false;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            if !(v[j - 1].is_odd() && v[j].is_odd()) {
                negative = !negative;
            }
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1] && !w[0].is_odd()) {
        return None;
    }
    Some((negative, v))
}

fn wedge_parity(diffs: &[Coord]) -> Parity {
    Parity::from_bit(diffs.iter().filter(|c| c.is_odd()).count() % 2 == 1)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GradedForm {
    terms: BTreeMap<Vec<Coord>, SuperExpr>,
}

impl GradedForm {
    pub fn zero() -> Self {
        GradedForm::default()
    }

    pub fn function(f: SuperExpr) -> Self {
        let mut w = GradedForm::zero();
        w.add_term(vec![], f);
        w
    }

    /// `dx`.
    pub fn differential(x: Coord) -> Self {
        GradedForm::term(SuperExpr::one(), vec![x])
    }

    /// `f ∧ dx_1 ∧ ... ∧ dx_p` with the differentials in the given order.
    pub fn term(f: SuperExpr, diffs: Vec<Coord>) -> Self {
        let mut w = GradedForm::zero();
        if let Some((negative, d)) = canonical_wedge(diffs) {
            w.add_term(d, if negative { -f } else { f });
        }
        w
    }

    fn add_term(&mut self, diffs: Vec<Coord>, f: SuperExpr) {
        if f.is_zero() {
            return;
        }
        match self.terms.get_mut(&diffs) {
            Some(v) => {
                *v += f;
                if v.is_zero() {
                    self.terms.remove(&diffs);
                }
            }
            None => {
                self.terms.insert(diffs, f);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Coord>, &SuperExpr)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the canonical wedge `diffs`.
    pub fn coefficient(&self, diffs: &[Coord]) -> SuperExpr {
        self.terms.get(diffs).cloned().unwrap_or_default()
    }

    /// Degree if homogeneous (zero counts as any degree, reported as `None`).
    pub fn degree(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(Vec::len);
        let first = it.next()?;
        if it.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }

    fn expect_degree(&self, expected: usize) -> Result<(), FormError> {
        for d in self.terms.keys() {
            if d.len() != expected {
                return Err(FormError::DegreeMismatch { expected, found: d.len() });
            }
        }
        Ok(())
    }

    /// Highest jet order among coefficients and differentials.
    pub fn max_order(&self) -> Option<u16> {
        self.terms.iter().flat_map(|(d, f)| d.iter().map(|c| c.order).chain(f.max_order())).max()
    }

    pub fn differential_max_order(&self) -> Option<u16> {
        self.terms.keys().flat_map(|d| d.iter().map(|c| c.order)).max()
    }

    /// Left multiplication by a function.
    pub fn mul_function(&self, g: &SuperExpr) -> GradedForm {
        let mut out = GradedForm::zero();
        for (d, f) in &self.terms {
            out.add_term(d.clone(), g * f);
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> GradedForm {
        let mut out = GradedForm::zero();
        for (d, f) in &self.terms {
            out.add_term(d.clone(), f.scale(c));
        }
        out
    }

    pub fn wedge(&self, other: &GradedForm) -> GradedForm {
        let mut out = GradedForm::zero();
        for (a, f) in &self.terms {
            for (b, g) in &other.terms {
                let mut diffs = a.clone();
                diffs.extend_from_slice(b);
                if let Some((negative, d)) = canonical_wedge(diffs) {
                    let c = f * &g.twist(wedge_parity(a));
                    out.add_term(d, if negative { -c } else { c });
                }
            }
        }
        out
    }

    /// Map every coefficient through `f`.
    fn map_coefficients(&self, f: impl Fn(&SuperExpr) -> SuperExpr) -> GradedForm {
        let mut out = GradedForm::zero();
        for (d, c) in &self.terms {
            out.add_term(d.clone(), f(c));
        }
        out
    }

    /// Pullback along a substitution `x ↦ s(x)`: coefficients are substituted
    /// and `dx ↦ d(s(x))`.
    pub fn substitute(&self, assignment: &BTreeMap<Coord, SuperExpr>) -> Result<GradedForm, FormError> {
        let mut out = GradedForm::zero();
        for (d, f) in &self.terms {
            let mut acc = GradedForm::function(f.substitute(assignment)?);
            for c in d {
                let dc = match assignment.get(c) {
                    Some(v) => exterior_d(&GradedForm::function(v.clone())),
                    None => GradedForm::differential(*c),
                };
                acc = acc.wedge(&dc);
            }
            out = &out + &acc;
        }
        Ok(out)
    }

    pub fn display_with<'a, F>(&'a self, names: F) -> FormDisplay<'a, F>
    where
        F: Fn(Coord) -> String,
    {
        FormDisplay { form: self, names }
    }
}

impl std::ops::Add for &GradedForm {
    type Output = GradedForm;
    fn add(self, rhs: &GradedForm) -> GradedForm {
        let mut out = self.clone();
        for (d, f) in &rhs.terms {
            out.add_term(d.clone(), f.clone());
        }
        out
    }
}

impl std::ops::Sub for &GradedForm {
    type Output = GradedForm;
    fn sub(self, rhs: &GradedForm) -> GradedForm {
        let mut out = self.clone();
        for (d, f) in &rhs.terms {
            out.add_term(d.clone(), -f);
        }
        out
    }
}

impl std::ops::Neg for &GradedForm {
    type Output = GradedForm;
    fn neg(self) -> GradedForm {
        self.map_coefficients(|c| -c)
    }
}

/// `τ*_{k,l}` on forms: an order check.
pub fn pullback_form(w: &GradedForm, proj: Projection) -> Result<GradedForm, FormError> {
    match w.max_order() {
        Some(found) if found > proj.target => Err(FormError::OrderExceeded { found, limit: proj.target }),
        _ => Ok(w.clone()),
    }
}

/// `df = Σ_x dx ∂f/∂x`, written with the coefficient moved to the left.
fn d_function(f: &SuperExpr) -> GradedForm {
    let mut out = GradedForm::zero();
    for x in f.coords() {
        out.add_term(vec![x], f.left_partial(x).twist(x.parity));
    }
    out
}

/// Exterior derivative: `d(f ∧ A) = df ∧ A` for a pure wedge `A`.
pub fn exterior_d(w: &GradedForm) -> GradedForm {
    let mut out = GradedForm::zero();
    for (a, f) in &w.terms {
        let df = d_function(f);
        out = &out + &df.wedge(&GradedForm::term(SuperExpr::one(), a.clone()));
    }
    out
}

/// Interior product with a field along a projection. Differentials of
/// order above the field's source order are rejected.
pub fn interior(x: &VectorFieldAlong, w: &GradedForm) -> Result<GradedForm, FormError> {
    let mut out = GradedForm::zero();
    for (a, f) in &w.terms {
        let f = f.twist(x.parity);
        let mut prefix_parity = Parity::Even;
        let mut negative = false;
        for (m, &c) in a.iter().enumerate() {
            if c.order > x.source_order {
                return Err(FormError::DomainMismatch { coord: c });
            }
            let g = x.component(c);
            if !g.is_zero() {
                let mut rest = a[..m].to_vec();
                rest.extend_from_slice(&a[m + 1..]);
                let coeff = &f * &g.twist(prefix_parity);
                out.add_term(rest, if negative { -coeff } else { coeff });
            }
            // passing i_X over dx costs (-1)^{1 + |X||x|}
            if !(x.parity.is_odd() && c.is_odd()) {
                negative = !negative;
            }
            prefix_parity = prefix_parity + c.parity;
        }
    }
    Ok(out)
}

/// `d_{T^(r)}`: the even, degree-0 derivation extending the total derivative
/// to forms, with `d_T(dx_j) = dx_{j+1}`. Raises the order by one.
pub fn d_total(r: u16, w: &GradedForm) -> Result<GradedForm, FormError> {
    if let Some(found) = w.max_order() {
        if found > r {
            return Err(FormError::OrderExceeded { found, limit: r });
        }
    }
    Ok(d_total_unchecked(w))
}

pub(crate) fn d_total_unchecked(w: &GradedForm) -> GradedForm {
    let mut out = GradedForm::zero();
    for (a, f) in &w.terms {
        out = &out + &GradedForm::term(total_derivative(f), a.clone());
        for m in 0..a.len() {
            let mut b = a.clone();
            b[m] = b[m].raised(1);
            out = &out + &GradedForm::term(f.clone(), b);
        }
    }
    out
}

/// Transpose of the vertical endomorphism on 1-forms:
/// `S*_k(dx_{j+1}) = (j+1) dx_j`, `S*_k(dx_0) = 0`.
pub fn transpose_s(k: u16, w: &GradedForm) -> Result<GradedForm, FormError> {
    w.expect_degree(1)?;
    let mut out = GradedForm::zero();
    for (a, f) in &w.terms {
        let c = a[0];
        if c.order > k {
            return Err(FormError::OrderExceeded { found: c.order, limit: k });
        }
        if c.order > 0 {
            out.add_term(vec![c.at_order(c.order - 1)], f.scale(&int(c.order as i64)));
        }
    }
    Ok(out)
}

/// The Cartan operator `Σ_{l=1}^k (-1)^{l+1}/l! · d_T^{l-1}(S*_k^l ω)`,
/// mapping 1-forms on `T^k` to 1-forms on `T^{2k-1}`.
pub fn cartan_operator(k: u16, w: &GradedForm) -> Result<GradedForm, FormError> {
    if k == 0 {
        return Err(FormError::OrderExceeded { found: 1, limit: 0 });
    }
    w.expect_degree(1)?;
    if let Some(found) = w.max_order() {
        if found > k {
            return Err(FormError::OrderExceeded { found, limit: k });
        }
    }
    let mut out = GradedForm::zero();
    let mut s_power = w.clone();
    let mut factorial = Rational::one();
    for l in 1..=k {
        s_power = transpose_s(k, &s_power)?;
        factorial *= int(l as i64);
        let mut t = s_power.clone();
        for r in k..k + l - 1 {
            t = d_total(r, &t)?;
        }
        let sign = if l % 2 == 1 { Rational::one() } else { -Rational::one() };
        out = &out + &t.scale(&(sign / factorial.clone()));
    }
    Ok(out)
}

/// The form along `τ_{k,l}` corresponding to a `τ_{k,l}`-semibasic 1-form,
/// stored by its components on `dx_j`, `j ≤ l`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckForm {
    pub level: u16,
    components: BTreeMap<Coord, SuperExpr>,
}

impl CheckForm {
    pub fn component(&self, x: Coord) -> SuperExpr {
        self.components.get(&x).cloned().unwrap_or_default()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Coord, &SuperExpr)> {
        self.components.iter()
    }
}

pub fn semibasic_check(w: &GradedForm, l: u16) -> Result<CheckForm, FormError> {
    w.expect_degree(1)?;
    let mut components = BTreeMap::new();
    for (a, f) in &w.terms {
        let c = a[0];
        if c.order > l {
            return Err(FormError::NotSemibasic { coord: c });
        }
        components.insert(c, f.clone());
    }
    Ok(CheckForm { level: l, components })
}

/// `⟨X, ω̌⟩ = Σ_x (-1)^{|X||f_x|} f_x X(x)` for `ω = Σ f_x dx`.
pub fn pair(x: &VectorFieldAlong, w: &CheckForm) -> Result<SuperExpr, FormError> {
    if x.source_order != w.level {
        return Err(FormError::DomainMismatch {
            coord: w.components.keys().next().copied().unwrap_or(Coord::even(0, w.level)),
        });
    }
    let mut out = SuperExpr::zero();
    for (c, f) in &w.components {
        out += &f.twist(x.parity) * &x.component(*c);
    }
    Ok(out)
}

pub struct FormDisplay<'a, F> {
    form: &'a GradedForm,
    names: F,
}

impl<F: Fn(Coord) -> String> fmt::Display for FormDisplay<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.form.is_zero() {
            return f.write_str("0");
        }
        for (i, (d, c)) in self.form.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            let wedge: Vec<String> = d.iter().map(|x| format!("d{}", (self.names)(*x))).collect();
            let coeff = c.display_with(&self.names).to_string();
            if d.is_empty() {
                f.write_str(&coeff)?;
            } else if let Some(k) = c.as_constant() {
                if k.is_one() {
                    f.write_str(&wedge.join("∧"))?;
                } else {
                    write!(f, "{}*{}", fmt_rational(&k), wedge.join("∧"))?;
                }
            } else if c.num_terms() == 1 {
                write!(f, "{}*{}", coeff, wedge.join("∧"))?;
            } else {
                write!(f, "({})*{}", coeff, wedge.join("∧"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for GradedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(|c| c.to_string()))
    }
}
