//! Coordinate models of the higher-order tangent supermanifolds `T^k M`.
//!
//! Jet coordinates are shared across orders: `q[j]` on `T^l M` is the same
//! symbol as `q[j]` on `T^k M` for `k ≥ l`. Projections and inclusions are
//! therefore order checks, never renamings.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{int, rat, AlgebraError, Coord, Parity, SuperExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    #[error("expression uses order {found} but the target chart has order {limit}")]
    OrderExceeded { found: u16, limit: u16 },
    #[error("projection from order {source_order} to {target} is not downward")]
    BadProjection { source_order: u16, target: u16 },
    #[error("field component for {coord} has the wrong parity")]
    ComponentParity { coord: Coord },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Coordinate ring of `T^k M` over a base with `even` and `odd` coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub even: Vec<String>,
    pub odd: Vec<String>,
    pub order: u16,
}

impl Chart {
    pub fn new(even: Vec<String>, odd: Vec<String>, order: u16) -> Self {
        Chart { even, odd, order }
    }

    pub fn with_order(&self, order: u16) -> Chart {
        Chart { order, ..self.clone() }
    }

    /// Base coordinates (order 0), even ones first.
    pub fn base_coords(&self) -> Vec<Coord> {
        let e = (0..self.even.len()).map(|i| Coord::even(i as u16, 0));
        let o = (0..self.odd.len()).map(|i| Coord::odd(i as u16, 0));
        e.chain(o).collect()
    }

    /// All coordinates `x_j`, `0 ≤ j ≤ order`, grouped by base coordinate.
    pub fn coords(&self) -> Vec<Coord> {
        self.coords_up_to(self.order)
    }

    pub fn coords_up_to(&self, order: u16) -> Vec<Coord> {
        self.base_coords().into_iter().flat_map(|c| (0..=order).map(move |j| c.at_order(j))).collect()
    }

    pub fn is_declared(&self, c: Coord) -> bool {
        let n = match c.parity {
            Parity::Even => self.even.len(),
            Parity::Odd => self.odd.len(),
        };
        (c.base as usize) < n
    }

    pub fn base_name(&self, c: Coord) -> &str {
        match c.parity {
            Parity::Even => &self.even[c.base as usize],
            Parity::Odd => &self.odd[c.base as usize],
        }
    }

    pub fn name(&self, c: Coord) -> String {
        if self.is_declared(c) {
            format!("{}[{}]", self.base_name(c), c.order)
        } else {
            c.to_string()
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Coord> {
        if let Some(i) = self.even.iter().position(|n| n == name) {
            return Some(Coord::even(i as u16, 0));
        }
        self.odd.iter().position(|n| n == name).map(|i| Coord::odd(i as u16, 0))
    }

    /// Reject generators outside this chart (undeclared, or above its order).
    pub fn check(&self, e: &SuperExpr) -> Result<(), JetError> {
        for c in e.coords() {
            if !self.is_declared(c) {
                return Err(AlgebraError::UndeclaredGenerator { coord: c }.into());
            }
            if c.order > self.order {
                return Err(JetError::OrderExceeded { found: c.order, limit: self.order });
            }
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, e: &'a SuperExpr) -> impl std::fmt::Display + 'a {
        e.display_with(move |c| self.name(c))
    }
}

/// The canonical projection `τ_{k,l}: T^k M → T^l M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Projection {
    pub source: u16,
    pub target: u16,
}

impl Projection {
    pub fn new(source: u16, target: u16) -> Result<Self, JetError> {
        if target > source {
            return Err(JetError::BadProjection { source_order: source, target });
        }
        Ok(Projection { source, target })
    }

    /// `τ_{k,l} ∘ τ_{l,j} = τ_{k,j}` on the level of pullbacks.
    pub fn then(self, next: Projection) -> Result<Projection, JetError> {
        if next.source != self.target {
            return Err(JetError::BadProjection { source_order: next.source, target: self.target });
        }
        Projection::new(self.source, next.target)
    }
}

fn check_order(e: &SuperExpr, limit: u16) -> Result<(), JetError> {
    match e.max_order() {
        Some(found) if found > limit => Err(JetError::OrderExceeded { found, limit }),
        _ => Ok(()),
    }
}

/// `τ*_{k,l}`: identity on shared symbols after checking `e` lives on `T^l`.
pub fn pullback(e: &SuperExpr, proj: Projection) -> Result<SuperExpr, JetError> {
    check_order(e, proj.target)?;
    Ok(e.clone())
}

/// Total time derivative: the even derivation with `T(x_j) = x_{j+1}`.
pub fn total_derivative(e: &SuperExpr) -> SuperExpr {
    let mut out = SuperExpr::zero();
    for c in e.coords() {
        out += &SuperExpr::var(c.raised(1)) * &e.left_partial(c);
    }
    out
}

pub fn total_derivative_n(e: &SuperExpr, n: u16) -> SuperExpr {
    (0..n).fold(e.clone(), |acc, _| total_derivative(&acc))
}

/// `f^k_j`: the `j`-th total derivative of a base superfunction, viewed on `T^k`.
pub fn lifted_function(f: &SuperExpr, j: u16, k: u16) -> Result<SuperExpr, JetError> {
    if j > k {
        return Err(JetError::OrderExceeded { found: j, limit: k });
    }
    check_order(f, 0)?;
    Ok(total_derivative_n(f, j))
}

/// A supervector field along `τ_{target,source}`: it sends functions on
/// `T^source` to functions on `T^target`, and is stored by its values on
/// the coordinates of `T^source`. Missing components are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFieldAlong {
    pub source_order: u16,
    pub target_order: u16,
    pub parity: Parity,
    components: BTreeMap<Coord, SuperExpr>,
}

impl VectorFieldAlong {
    pub fn new(source_order: u16, target_order: u16, parity: Parity) -> Self {
        VectorFieldAlong { source_order, target_order, parity, components: BTreeMap::new() }
    }

    /// Coordinate vector field `∂/∂x` on `T^order`.
    pub fn coordinate(x: Coord, order: u16) -> Self {
        let mut v = VectorFieldAlong::new(order, order, x.parity);
        v.components.insert(x, SuperExpr::one());
        v
    }

    pub fn set(&mut self, x: Coord, value: SuperExpr) -> Result<(), JetError> {
        if x.order > self.source_order {
            return Err(JetError::OrderExceeded { found: x.order, limit: self.source_order });
        }
        check_order(&value, self.target_order)?;
        if !value.is_homogeneous(x.parity + self.parity) {
            return Err(JetError::ComponentParity { coord: x });
        }
        if value.is_zero() {
            self.components.remove(&x);
        } else {
            self.components.insert(x, value);
        }
        Ok(())
    }

    pub fn with(mut self, x: Coord, value: SuperExpr) -> Result<Self, JetError> {
        self.set(x, value)?;
        Ok(self)
    }

    pub fn component(&self, x: Coord) -> SuperExpr {
        self.components.get(&x).cloned().unwrap_or_default()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Coord, &SuperExpr)> {
        self.components.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// `X(f) = Σ_x X(x) ∂f/∂x` with left partials.
    pub fn apply(&self, f: &SuperExpr) -> Result<SuperExpr, JetError> {
        check_order(f, self.source_order)?;
        let mut out = SuperExpr::zero();
        for c in f.coords() {
            if let Some(v) = self.components.get(&c) {
                out += v * &f.left_partial(c);
            }
        }
        Ok(out)
    }

    /// Compose with a pullback on the source side (`X ∘ τ*_{s,l}`): keep
    /// only the components of order `≤ l`.
    pub fn restrict_source(&self, l: u16) -> VectorFieldAlong {
        VectorFieldAlong {
            source_order: l,
            target_order: self.target_order,
            parity: self.parity,
            components: self.components.iter().filter(|(c, _)| c.order <= l).map(|(c, v)| (*c, v.clone())).collect(),
        }
    }

    /// Compose with a pullback on the target side (`τ* ∘ X`).
    pub fn widen_target(&self, k: u16) -> Result<VectorFieldAlong, JetError> {
        if k < self.target_order {
            for v in self.components.values() {
                check_order(v, k)?;
            }
        }
        Ok(VectorFieldAlong { target_order: k, ..self.clone() })
    }

    pub fn scale(&self, c: &SuperExpr) -> VectorFieldAlong {
        let mut out = VectorFieldAlong::new(self.source_order, self.target_order, self.parity);
        for (x, v) in &self.components {
            let p = c * v;
            if !p.is_zero() {
                out.components.insert(*x, p);
            }
        }
        out
    }

    pub fn sub(&self, other: &VectorFieldAlong) -> VectorFieldAlong {
        let mut out = self.clone();
        for (x, v) in &other.components {
            let d = &out.component(*x) - v;
            if d.is_zero() {
                out.components.remove(x);
            } else {
                out.components.insert(*x, d);
            }
        }
        out
    }
}

/// The total derivative `T^(r)` as a field along `τ_{r+1,r}` on the chart's
/// coordinates.
pub fn total_derivative_field(chart: &Chart, r: u16) -> VectorFieldAlong {
    let mut v = VectorFieldAlong::new(r, r + 1, Parity::Even);
    for c in chart.coords_up_to(r) {
        v.components.insert(c, SuperExpr::var(c.raised(1)));
    }
    v
}

/// `X^(l)` for `X` along `τ_{k,0}`: component on `x_j` is `T^j X(x)`.
pub fn lift_vector_field(x: &VectorFieldAlong, l: u16) -> Result<VectorFieldAlong, JetError> {
    if x.source_order != 0 {
        return Err(JetError::OrderExceeded { found: x.source_order, limit: 0 });
    }
    let k = x.target_order;
    let mut out = VectorFieldAlong::new(l, k + l, x.parity);
    for (c, v) in &x.components {
        let mut d = v.clone();
        for j in 0..=l {
            if !d.is_zero() {
                out.components.insert(c.at_order(j), d.clone());
            }
            d = total_derivative(&d);
        }
    }
    Ok(out)
}

/// Vertical lift of a superfunction on `T^{k-1}` to `T^k`:
/// `Σ_x Σ_j 1/(j+1) (∂F/∂x_j) x_{j+1}` with left partials, the derivative
/// standing to the left of the new coordinate.
pub fn vertical_lift_function(f: &SuperExpr, k: u16) -> Result<SuperExpr, JetError> {
    if k == 0 {
        return Err(JetError::OrderExceeded { found: 1, limit: 0 });
    }
    check_order(f, k - 1)?;
    let mut out = SuperExpr::zero();
    for c in f.coords() {
        let w = rat(1, c.order as i64 + 1);
        out += (&f.left_partial(c) * &SuperExpr::var(c.raised(1))).scale(&w);
    }
    Ok(out)
}

/// Vertical lift of a field along `τ_{k,k-1}`: the field on `T^k` with
/// components `x_{j+1} ↦ (j+1) X(x_j)` and `x_0 ↦ 0`.
pub fn vertical_lift_field(x: &VectorFieldAlong) -> Result<VectorFieldAlong, JetError> {
    let k = x.target_order;
    if x.source_order + 1 != k {
        return Err(JetError::BadProjection { source_order: k, target: x.source_order });
    }
    let mut out = VectorFieldAlong::new(k, k, x.parity);
    for (c, v) in &x.components {
        out.components.insert(c.raised(1), v.scale(&int(c.order as i64 + 1)));
    }
    Ok(out)
}

/// Liouville field `Δ_k = (T^(k-1))^V`.
pub fn liouville(chart: &Chart, k: u16) -> Result<VectorFieldAlong, JetError> {
    if k == 0 {
        return Err(JetError::OrderExceeded { found: 1, limit: 0 });
    }
    vertical_lift_field(&total_derivative_field(chart, k - 1))
}

/// Vertical superendomorphism `S_k(Y) = (Y ∘ τ*_{k,k-1})^V` for a field on `T^k`.
pub fn vertical_endomorphism(k: u16, y: &VectorFieldAlong) -> Result<VectorFieldAlong, JetError> {
    if k == 0 || y.source_order != k || y.target_order != k {
        return Err(JetError::BadProjection { source_order: y.target_order, target: y.source_order });
    }
    vertical_lift_field(&y.restrict_source(k - 1))
}

/// Build a field on `T^k` whose action on `x_j` is `x_{j+1}` for `j < k`,
/// with the given values on the top coordinates.
pub fn sode_field(chart: &Chart, k: u16, top: &BTreeMap<Coord, SuperExpr>) -> Result<VectorFieldAlong, JetError> {
    let mut g = VectorFieldAlong::new(k, k, Parity::Even);
    for c in chart.coords_up_to(k) {
        if c.order < k {
            g.set(c, SuperExpr::var(c.raised(1)))?;
        } else if let Some(v) = top.get(&c.raised(1)) {
            g.set(c, v.clone())?;
        }
    }
    Ok(g)
}

/// `Γ(x_j) = x_{j+1}` for every `j < k`.
pub fn satisfies_sode_condition(chart: &Chart, k: u16, g: &VectorFieldAlong) -> bool {
    chart.coords_up_to(k).into_iter().filter(|c| c.order < k).all(|c| g.component(c) == SuperExpr::var(c.raised(1)))
}
