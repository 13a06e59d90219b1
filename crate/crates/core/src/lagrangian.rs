//! From a super-Lagrangian on `T^k M` to its Cartan forms, energy,
//! Euler–Lagrange form, regularity verdict, and Lagrangian dynamics.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::algebra::{AlgebraError, Coord, Parity, SuperExpr};
use crate::forms::{
    cartan_operator, d_total, exterior_d, interior, pair, semibasic_check, CheckForm, FormError, GradedForm,
};
use crate::jet::{
    liouville, satisfies_sode_condition, sode_field, total_derivative, total_derivative_field, vertical_endomorphism,
    Chart, JetError, VectorFieldAlong,
};
use crate::linalg::{determinant, is_zero_matrix, solve_affine, AffineSolveError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("the Lagrangian must be even")]
    NotEven,
    #[error("the Lagrangian order must be at least 1")]
    ZeroOrder,
    #[error("Lagrangian is not regular ({0})")]
    NotRegular(Regularity),
    #[error("linear solve for the dynamics failed: {0}")]
    SingularSystem(String),
    #[error("internal consistency check failed: {0}")]
    VerificationFailed(&'static str),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// An even superfunction `L` on `T^k M`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperLagrangian {
    chart: Chart,
    expr: SuperExpr,
}

impl SuperLagrangian {
    /// `chart.order` is the order `k` of the Lagrangian.
    pub fn new(chart: Chart, expr: SuperExpr) -> Result<Self, PipelineError> {
        if chart.order == 0 {
            return Err(PipelineError::ZeroOrder);
        }
        chart.check(&expr)?;
        if !expr.is_homogeneous(Parity::Even) {
            return Err(PipelineError::NotEven);
        }
        Ok(SuperLagrangian { chart, expr })
    }

    pub fn order(&self) -> u16 {
        self.chart.order
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn expr(&self) -> &SuperExpr {
        &self.expr
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularity {
    Regular,
    Degenerate,
    /// A block determinant is a nonconstant polynomial: it vanishes on a
    /// proper subvariety, which is reported rather than decided pointwise.
    Indeterminate,
}

impl fmt::Display for Regularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regularity::Regular => "regular",
            Regularity::Degenerate => "degenerate",
            Regularity::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularityReport {
    pub verdict: Regularity,
    /// Body of the even–even Hessian determinant in the order-`k` coordinates.
    pub even_determinant: SuperExpr,
    /// Body determinant of the odd block that controls the odd equations.
    pub odd_determinant: SuperExpr,
    /// Order of the odd Euler–Lagrange equations: `2k` when the odd Hessian
    /// is nondegenerate, lower for odd sectors of first-order type.
    pub odd_equation_order: Option<u16>,
}

/// `Θ_L`, `Ω_L`, `E_L`, `δL` for one Lagrangian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CartanData {
    pub theta: GradedForm,
    pub omega: GradedForm,
    pub energy: SuperExpr,
    pub delta_l: GradedForm,
}

/// Which of the structural identities hold for a Lagrangian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub omega_closed: bool,
    pub theta_semibasic: bool,
    pub delta_semibasic: bool,
    /// `δL = i_{T^(2k-1)} Ω_L - τ* dE_L`.
    pub identity_chain: bool,
    /// `d_T Θ_L = i_T dΘ_L + d i_T Θ_L`.
    pub cartan_identity: bool,
}

impl StructureReport {
    pub fn all(&self) -> bool {
        self.omega_closed && self.theta_semibasic && self.delta_semibasic && self.identity_chain && self.cartan_identity
    }
}

/// `Θ_L = S^(k)(dL)`.
pub fn cartan_one_form(l: &SuperLagrangian) -> Result<GradedForm, PipelineError> {
    let dl = exterior_d(&GradedForm::function(l.expr.clone()));
    Ok(cartan_operator(l.order(), &dl)?)
}

/// `Ω_L = -dΘ_L`.
pub fn cartan_two_form(l: &SuperLagrangian) -> Result<GradedForm, PipelineError> {
    Ok(-&exterior_d(&cartan_one_form(l)?))
}

/// `E_L = ⟨τ* ∘ T^(k-1), Θ̌_L⟩ - L`.
pub fn energy(l: &SuperLagrangian) -> Result<SuperExpr, PipelineError> {
    let theta = cartan_one_form(l)?;
    energy_from_theta(l, &theta)
}

fn energy_from_theta(l: &SuperLagrangian, theta: &GradedForm) -> Result<SuperExpr, PipelineError> {
    let k = l.order();
    let check = semibasic_check(theta, k - 1)?;
    let t = total_derivative_field(&l.chart, k - 1).widen_target(2 * k - 1)?;
    Ok(&pair(&t, &check)? - &l.expr)
}

/// `δL = τ*(dL) - d_{T^(2k-1)} Θ_L`.
pub fn euler_lagrange_form(l: &SuperLagrangian) -> Result<GradedForm, PipelineError> {
    let theta = cartan_one_form(l)?;
    el_from_theta(l, &theta)
}

fn el_from_theta(l: &SuperLagrangian, theta: &GradedForm) -> Result<GradedForm, PipelineError> {
    let k = l.order();
    let dl = exterior_d(&GradedForm::function(l.expr.clone()));
    Ok(&dl - &d_total(2 * k - 1, theta)?)
}

/// The Lagrangian together with its Cartan data, computed once.
#[derive(Clone, Debug)]
pub struct LagrangianSystem {
    lagrangian: SuperLagrangian,
    data: CartanData,
    delta_check: CheckForm,
    theta_check: CheckForm,
}

impl LagrangianSystem {
    pub fn new(lagrangian: SuperLagrangian) -> Result<Self, PipelineError> {
        let k = lagrangian.order();
        let theta = cartan_one_form(&lagrangian)?;
        let omega = -&exterior_d(&theta);
        let energy = energy_from_theta(&lagrangian, &theta)?;
        let delta_l = el_from_theta(&lagrangian, &theta)?;
        let theta_check = semibasic_check(&theta, k - 1)?;
        let delta_check = semibasic_check(&delta_l, 0)?;
        Ok(LagrangianSystem {
            lagrangian,
            data: CartanData { theta, omega, energy, delta_l },
            delta_check,
            theta_check,
        })
    }

    pub fn lagrangian(&self) -> &SuperLagrangian {
        &self.lagrangian
    }

    pub fn chart(&self) -> &Chart {
        &self.lagrangian.chart
    }

    pub fn order(&self) -> u16 {
        self.lagrangian.order()
    }

    pub fn data(&self) -> &CartanData {
        &self.data
    }

    pub fn theta_check(&self) -> &CheckForm {
        &self.theta_check
    }

    pub fn delta_check(&self) -> &CheckForm {
        &self.delta_check
    }

    /// Check-form component of `δL` on `dx_0`: the graded Euler–Lagrange
    /// expression of the base coordinate `x`.
    pub fn euler_lagrange(&self, x: Coord) -> SuperExpr {
        self.delta_check.component(x.at_order(0))
    }

    pub fn euler_lagrange_map(&self) -> BTreeMap<Coord, SuperExpr> {
        self.chart().base_coords().into_iter().map(|x| (x, self.euler_lagrange(x))).collect()
    }

    pub fn verify_structure(&self) -> Result<StructureReport, PipelineError> {
        let k = self.order();
        let d = &self.data;
        let omega_closed = exterior_d(&d.omega).is_zero();
        let theta_semibasic = semibasic_check(&d.theta, k - 1).is_ok();
        let delta_semibasic = semibasic_check(&d.delta_l, 0).is_ok();

        let t = total_derivative_field(self.chart(), 2 * k - 1);
        let i_t_omega = interior(&t, &d.omega)?;
        let de = exterior_d(&GradedForm::function(d.energy.clone()));
        let identity_chain = &i_t_omega - &de == d.delta_l;

        let dt_theta = d_total(2 * k - 1, &d.theta)?;
        let i_t_dtheta = interior(&t, &exterior_d(&d.theta))?;
        let d_i_t_theta = exterior_d(&interior(&t, &d.theta)?);
        let cartan_identity = dt_theta == &i_t_dtheta + &d_i_t_theta;

        Ok(StructureReport { omega_closed, theta_semibasic, delta_semibasic, identity_chain, cartan_identity })
    }

    /// Super-Hessian block analysis in the order-`k` coordinates.
    pub fn regularity(&self) -> RegularityReport {
        let k = self.order();
        let chart = self.chart();
        let l = &self.lagrangian.expr;
        let hessian = |coords: &[Coord]| -> Vec<Vec<SuperExpr>> {
            coords.iter().map(|a| coords.iter().map(|b| l.left_partial(*a).left_partial(*b).body()).collect()).collect()
        };
        let evens: Vec<Coord> = (0..chart.even.len()).map(|i| Coord::even(i as u16, k)).collect();
        let even_determinant = determinant(&hessian(&evens));

        let (odd_determinant, odd_equation_order) = if chart.odd.is_empty() {
            (SuperExpr::one(), None)
        } else {
            let odds: Vec<Coord> = (0..chart.odd.len()).map(|i| Coord::odd(i as u16, k)).collect();
            let h = hessian(&odds);
            if !is_zero_matrix(&h) {
                (determinant(&h), Some(2 * k))
            } else {
                // first-order odd sector: the odd equations lose their top order
                let eqs: Vec<SuperExpr> =
                    (0..chart.odd.len()).map(|i| self.euler_lagrange(Coord::odd(i as u16, 0))).collect();
                let r = eqs.iter().flat_map(|e| e.coords()).filter(|c| c.is_odd()).map(|c| c.order).max();
                match r {
                    None => (SuperExpr::zero(), None),
                    Some(r) => {
                        let m: Vec<Vec<SuperExpr>> = eqs
                            .iter()
                            .map(|e| {
                                (0..chart.odd.len()).map(|j| e.left_partial(Coord::odd(j as u16, r)).body()).collect()
                            })
                            .collect();
                        (determinant(&m), Some(r))
                    }
                }
            }
        };

        let verdict = if even_determinant.is_zero() || odd_determinant.is_zero() {
            Regularity::Degenerate
        } else if even_determinant.as_constant().is_some() && odd_determinant.as_constant().is_some() {
            Regularity::Regular
        } else {
            Regularity::Indeterminate
        };
        RegularityReport { verdict, even_determinant, odd_determinant, odd_equation_order }
    }

    /// Solve `γ*(δL) = 0` for the top-order coordinates and assemble `Γ`.
    pub fn solve_dynamics(&self) -> Result<Dynamics, PipelineError> {
        let report = self.regularity();
        if report.verdict != Regularity::Regular {
            return Err(PipelineError::NotRegular(report.verdict));
        }
        let k = self.order();
        let top = 2 * k;
        let chart = self.chart().clone();
        let base = chart.base_coords();
        let equations: Vec<SuperExpr> = base.iter().map(|x| self.euler_lagrange(*x)).collect();
        let unknowns: Vec<Coord> = base.iter().map(|x| x.at_order(top)).collect();
        let first = solve_affine(&equations, &unknowns).map_err(singular)?;

        let mut assignments = first.solved.clone();
        let mut constraint_coords = Vec::new();
        let constraint_equations = first.residual.clone();
        if !first.free.is_empty() {
            let free_base: Vec<Coord> = first.free.iter().map(|c| c.at_order(0)).collect();
            let r = constraint_equations
                .iter()
                .flat_map(|e| e.coords())
                .filter(|c| free_base.contains(&c.at_order(0)))
                .map(|c| c.order)
                .max()
                .ok_or_else(|| {
                    PipelineError::SingularSystem("top-order coordinates left undetermined by the equations".into())
                })?;
            let lower: Vec<Coord> = free_base.iter().map(|b| b.at_order(r)).collect();
            let second = solve_affine(&constraint_equations, &lower).map_err(singular)?;
            if !second.free.is_empty() || !second.residual.is_empty() {
                return Err(PipelineError::SingularSystem(
                    "lower-order equations do not determine the remaining coordinates".into(),
                ));
            }
            for b in &free_base {
                let mut value = second.solved[&b.at_order(r)].clone();
                for s in r..=top {
                    assignments.insert(b.at_order(s), value.clone());
                    if s < top {
                        constraint_coords.push(b.at_order(s));
                    }
                    value = total_derivative(&value);
                }
            }
        } else if !constraint_equations.is_empty() {
            return Err(PipelineError::SingularSystem("lower-order equations with no coordinate to solve for".into()));
        }

        let assignments = reduce_to_fixpoint(assignments, 4 * k as usize + 8)?;
        let forces: BTreeMap<Coord, SuperExpr> =
            base.iter().map(|x| (x.at_order(top), assignments[&x.at_order(top)].clone())).collect();
        let constraints: BTreeMap<Coord, SuperExpr> =
            constraint_coords.iter().map(|c| (*c, assignments[c].clone())).collect();

        let phase = chart.with_order(top - 1);
        let field = sode_field(&phase, top - 1, &forces)?;
        let dynamics = Dynamics { chart: phase, order: top - 1, forces, constraints, field };

        if !dynamics.residual(self)?.is_zero() {
            return Err(PipelineError::VerificationFailed("dynamical equation residual does not vanish"));
        }
        if !is_sode(dynamics.chart(), top - 1, &dynamics.field)? {
            return Err(PipelineError::VerificationFailed("solution is not a SODE"));
        }
        Ok(dynamics)
    }
}

fn singular(e: AffineSolveError) -> PipelineError {
    PipelineError::SingularSystem(match e {
        AffineSolveError::NonAffine { equation } => format!("equation {equation} is not affine in its top order"),
        AffineSolveError::NoUnitPivot { unknown } => format!("no invertible pivot for {unknown}"),
    })
}

/// Substitute the assignment into its own values until no assigned symbol
/// remains on any right-hand side.
fn reduce_to_fixpoint(
    mut map: BTreeMap<Coord, SuperExpr>,
    max_rounds: usize,
) -> Result<BTreeMap<Coord, SuperExpr>, PipelineError> {
    for _ in 0..max_rounds {
        let next: BTreeMap<Coord, SuperExpr> = map.iter().map(|(c, v)| (*c, v.substitute_unchecked(&map))).collect();
        if next == map {
            break;
        }
        map = next;
    }
    if map.values().any(|v| v.coords().iter().any(|c| map.contains_key(c))) {
        return Err(PipelineError::SingularSystem("coupled constraint chain does not close".into()));
    }
    Ok(map)
}

/// The Lagrangian SODE `Γ` on `T^{2k-1} M` and its section `γ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dynamics {
    chart: Chart,
    order: u16,
    forces: BTreeMap<Coord, SuperExpr>,
    constraints: BTreeMap<Coord, SuperExpr>,
    field: VectorFieldAlong,
}

impl Dynamics {
    /// Phase-space chart `T^{2k-1} M`.
    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn order(&self) -> u16 {
        self.order
    }

    /// `x_{2k} ↦ force`, one entry per base coordinate.
    pub fn forces(&self) -> &BTreeMap<Coord, SuperExpr> {
        &self.forces
    }

    /// Lower-order equations solved for their highest coordinate, prolonged
    /// up to order `2k-1`. Empty for fully regular Lagrangians.
    pub fn constraints(&self) -> &BTreeMap<Coord, SuperExpr> {
        &self.constraints
    }

    pub fn field(&self) -> &VectorFieldAlong {
        &self.field
    }

    /// The section `γ` as the substitution of top-order coordinates.
    pub fn section(&self) -> &BTreeMap<Coord, SuperExpr> {
        &self.forces
    }

    /// Restrict an expression to the constraint surface.
    pub fn reduce(&self, e: &SuperExpr) -> SuperExpr {
        e.substitute_unchecked(&self.constraints)
    }

    /// `Γ(G)` on the constraint surface.
    pub fn apply(&self, g: &SuperExpr) -> Result<SuperExpr, PipelineError> {
        Ok(self.reduce(&self.field.apply(g)?))
    }

    /// `i_Γ Ω_L - dE_L`, pulled back to the constraint surface.
    pub fn residual(&self, system: &LagrangianSystem) -> Result<GradedForm, PipelineError> {
        let d = system.data();
        let i_omega = interior(&self.field, &d.omega)?;
        let de = exterior_d(&GradedForm::function(d.energy.clone()));
        Ok((&i_omega - &de).substitute(&self.constraints)?)
    }
}

/// Both SODE conditions: `Γ(x_j) = x_{j+1}` for `j < k`, and `S_k(Γ) = Δ_k`.
pub fn sode_conditions(chart: &Chart, k: u16, g: &VectorFieldAlong) -> Result<(bool, bool), PipelineError> {
    let by_components = satisfies_sode_condition(chart, k, g);
    let by_endomorphism = vertical_endomorphism(k, g)? == liouville(chart, k)?;
    Ok((by_components, by_endomorphism))
}

pub fn is_sode(chart: &Chart, k: u16, g: &VectorFieldAlong) -> Result<bool, PipelineError> {
    let (a, b) = sode_conditions(chart, k, g)?;
    if a != b {
        return Err(PipelineError::VerificationFailed("SODE characterizations disagree"));
    }
    Ok(a)
}
