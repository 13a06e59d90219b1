//! Strategies and law checks shared by the property suite and the acceptance runner.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use supermech::algebra::{Coord, Parity, SuperExpr};
use supermech::forms::{d_total, exterior_d, interior, pair, semibasic_check, GradedForm};
use supermech::jet::{lift_vector_field, Chart, VectorFieldAlong};

pub fn base(i: u8) -> Coord {
    match i % 4 {
        0 => Coord::even(0, 0),
        1 => Coord::even(1, 0),
        2 => Coord::odd(0, 0),
        _ => Coord::odd(1, 0),
    }
}

pub fn coord(max_order: u16) -> impl Strategy<Value = Coord> {
    (0u8..4, 0..=max_order).prop_map(|(b, o)| base(b).at_order(o))
}

pub fn expr(max_order: u16) -> impl Strategy<Value = SuperExpr> {
    prop::collection::vec((-3i64..=3, prop::collection::vec(coord(max_order), 0..4)), 0..5).prop_map(|terms| {
        let mut out = SuperExpr::zero();
        for (c, vars) in terms {
            let mut t = SuperExpr::int(c);
            for v in vars {
                t = &t * &SuperExpr::var(v);
            }
            out += t;
        }
        out
    })
}

pub fn part(e: &SuperExpr, p: Parity) -> SuperExpr {
    let mut out = SuperExpr::zero();
    for (m, c) in e.terms() {
        if m.parity() == p {
            out += SuperExpr::monomial(m.clone(), c.clone());
        }
    }
    out
}

/// Drop every term involving a coordinate of order above `max_order`.
pub fn truncate(e: &SuperExpr, max_order: u16) -> SuperExpr {
    let mut out = SuperExpr::zero();
    for (m, c) in e.terms() {
        if m.coords().all(|x| x.order <= max_order) {
            out += SuperExpr::monomial(m.clone(), c.clone());
        }
    }
    out
}

pub fn parity() -> impl Strategy<Value = Parity> {
    any::<bool>().prop_map(Parity::from_bit)
}

pub fn homogeneous(max_order: u16) -> impl Strategy<Value = (SuperExpr, Parity)> {
    (expr(max_order), parity()).prop_map(|(e, p)| (part(&e, p), p))
}

pub fn form(max_order: u16, max_degree: usize) -> impl Strategy<Value = GradedForm> {
    prop::collection::vec((expr(max_order), prop::collection::vec(coord(max_order), 0..=max_degree)), 0..4).prop_map(
        |terms| terms.into_iter().fold(GradedForm::zero(), |acc, (f, diffs)| &acc + &GradedForm::term(f, diffs)),
    )
}

/// A single term `f dx_1 ∧ ... ∧ dx_p` with homogeneous `f`; returns the form,
/// its degree and its total parity.
pub fn homogeneous_form(max_order: u16) -> impl Strategy<Value = (GradedForm, usize, Parity)> {
    (homogeneous(max_order), prop::collection::vec(coord(max_order), 0..3)).prop_map(|((f, p), diffs)| {
        let parity = diffs.iter().fold(p, |acc, c| acc + c.parity);
        let degree = diffs.len();
        (GradedForm::term(f, diffs), degree, parity)
    })
}

pub fn field(source: u16, target: u16) -> impl Strategy<Value = VectorFieldAlong> {
    (parity(), prop::collection::vec((0u8..4, 0..=source, expr(target)), 0..4)).prop_map(move |(p, comps)| {
        let mut x = VectorFieldAlong::new(source, target, p);
        for (b, o, e) in comps {
            let c = base(b).at_order(o);
            x.set(c, part(&e, c.parity + p)).unwrap();
        }
        x
    })
}

pub fn sign(p: Parity, q: Parity) -> SuperExpr {
    if p.is_odd() && q.is_odd() {
        SuperExpr::int(-1)
    } else {
        SuperExpr::one()
    }
}

pub fn form_sign(odd: bool) -> impl Fn(&GradedForm) -> GradedForm {
    move |w| if odd { -w } else { w.clone() }
}

pub fn chart(k: u16) -> Chart {
    Chart::new(vec!["q".into(), "r".into()], vec!["theta".into(), "phi".into()], k)
}
/// `(k, r, l)` with `r ≤ k`, `l ≤ r` and `r + l ≤ k`.
pub fn pairing_orders() -> impl Strategy<Value = (u16, u16, u16)> {
    (1u16..=3).prop_flat_map(|k| (Just(k), 0..=k)).prop_flat_map(|(k, r)| (Just(k), Just(r), 0..=r.min(k - r)))
}

pub fn d_squared(w: &GradedForm) -> Result<(), TestCaseError> {
    prop_assert!(exterior_d(&exterior_d(w)).is_zero());
    Ok(())
}

pub fn d_commutes_with_total_derivative(w: &GradedForm) -> Result<(), TestCaseError> {
    let a = exterior_d(&d_total(2, w).unwrap());
    let b = d_total(3, &exterior_d(w)).unwrap();
    prop_assert_eq!(a, b);
    Ok(())
}

/// `α ∧ β = (-1)^{pq + ab} β ∧ α` for `α` of bidegree `(p, a)`, `β` of `(q, b)`.
pub fn bigraded_commutation(
    (a, p, x): &(GradedForm, usize, Parity),
    (b, q, y): &(GradedForm, usize, Parity),
) -> Result<(), TestCaseError> {
    let odd = ((p * q) % 2 == 1) != (x.is_odd() && y.is_odd());
    prop_assert_eq!(a.wedge(b), form_sign(odd)(&b.wedge(a)));
    Ok(())
}

pub fn left_partial_derivation((a, p): &(SuperExpr, Parity), b: &SuperExpr, x: Coord) -> Result<(), TestCaseError> {
    let lhs = (a * b).left_partial(x);
    let rhs = &(&a.left_partial(x) * b) + &(&sign(x.parity, *p) * &(a * &b.left_partial(x)));
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

pub fn partials_graded_commute(f: &SuperExpr, x: Coord, y: Coord) -> Result<(), TestCaseError> {
    let xy = f.left_partial(y).left_partial(x);
    let yx = f.left_partial(x).left_partial(y);
    prop_assert_eq!(xy, &sign(x.parity, y.parity) * &yx);
    Ok(())
}

/// `i_X(α ∧ β) = i_X α ∧ β + (-1)^{p + |X| a} α ∧ i_X β`.
pub fn interior_derivation(
    x: &VectorFieldAlong,
    (a, p, ap): &(GradedForm, usize, Parity),
    b: &GradedForm,
) -> Result<(), TestCaseError> {
    let lhs = interior(x, &a.wedge(b)).unwrap();
    let odd = (p % 2 == 1) != (x.parity.is_odd() && ap.is_odd());
    let rhs = &interior(x, a).unwrap().wedge(b) + &form_sign(odd)(&a.wedge(&interior(x, b).unwrap()));
    prop_assert_eq!(lhs, rhs);
    Ok(())
}

/// For `ω = Σ f dx_j` with `j ≤ l` and `f` on `T^r`: `i_{X^(k)} ω = ⟨X^(l), ω̌⟩`.
pub fn semibasic_pairing(
    (k, r, l): (u16, u16, u16),
    x: &VectorFieldAlong,
    coeffs: &[(u8, SuperExpr)],
) -> Result<(), TestCaseError> {
    let mut w = GradedForm::zero();
    for (i, (b, f)) in coeffs.iter().enumerate() {
        w = &w + &GradedForm::term(truncate(f, r), vec![base(*b).at_order(i as u16 % (l + 1))]);
    }
    let lhs = interior(&lift_vector_field(x, k).unwrap(), &w).unwrap();
    let rhs = pair(&lift_vector_field(x, l).unwrap(), &semibasic_check(&w, l).unwrap()).unwrap();
    prop_assert_eq!(lhs, GradedForm::function(rhs));
    Ok(())
}
