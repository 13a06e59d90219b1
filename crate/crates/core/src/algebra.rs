//! Exact supercommutative polynomial arithmetic.
//!
//! A [`SuperExpr`] is a finite sum of terms `c * (even monomial) * (odd product)`
//! with rational `c`. The odd part of every term is kept as a strictly
//! increasing list of generators, so reordering always happens through
//! [`sort_odd`], which tracks the sign of the permutation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn from_bit(odd: bool) -> Self {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn flip(self) -> Self {
        Parity::from_bit(!self.is_odd())
    }
}

impl Add for Parity {
    type Output = Parity;
    fn add(self, rhs: Parity) -> Parity {
        Parity::from_bit(self.is_odd() != rhs.is_odd())
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("even"),
            Parity::Odd => f.write_str("odd"),
        }
    }
}

/// A jet coordinate `x^base_order`: base coordinate `base` (the `i` of `q^i`
/// or the `α` of `θ^α`) differentiated `order` times.
///
/// The derived ordering compares parity first, then `(base, order)`; among
/// odd generators this is the canonical order of odd factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub parity: Parity,
    pub base: u16,
    pub order: u16,
}

impl Coord {
    pub fn even(base: u16, order: u16) -> Self {
        Coord { parity: Parity::Even, base, order }
    }

    pub fn odd(base: u16, order: u16) -> Self {
        Coord { parity: Parity::Odd, base, order }
    }

    pub fn at_order(self, order: u16) -> Self {
        Coord { order, ..self }
    }

    pub fn raised(self, by: u16) -> Self {
        Coord { order: self.order + by, ..self }
    }

    pub fn is_odd(self) -> bool {
        self.parity.is_odd()
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parity {
            Parity::Even => write!(f, "x{}[{}]", self.base, self.order),
            Parity::Odd => write!(f, "t{}[{}]", self.base, self.order),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("expression mixes even and odd terms")]
    MixedParity,
    #[error("the zero expression has no parity")]
    ZeroExpression,
    #[error("substituted value for {coord} has the wrong parity")]
    ParityMismatch { coord: Coord },
    #[error("generator {coord} is not declared")]
    UndeclaredGenerator { coord: Coord },
}

/// Sort a list of odd generators in place and return the permutation sign,
/// or `None` if some generator repeats (the product vanishes).
pub(crate) fn sort_odd(v: &mut [Coord]) -> Option<bool> {
    let mut negative = false;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            negative = !negative;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(negative)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    /// Even generators with positive exponents, sorted by generator.
    pub even: Vec<(Coord, u32)>,
    /// Distinct odd generators in increasing order.
    pub odd: Vec<Coord>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn is_one(&self) -> bool {
        self.even.is_empty() && self.odd.is_empty()
    }

    pub fn parity(&self) -> Parity {
        Parity::from_bit(self.odd.len() % 2 == 1)
    }

    pub fn degree(&self) -> u32 {
        self.even.iter().map(|(_, e)| *e).sum::<u32>() + self.odd.len() as u32
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        self.even.iter().map(|(c, _)| *c).chain(self.odd.iter().copied())
    }

    pub fn max_order(&self) -> Option<u16> {
        self.coords().map(|c| c.order).max()
    }

    /// Exponent of a generator (0 or 1 for odd ones).
    pub fn exponent(&self, c: Coord) -> u32 {
        if c.is_odd() {
            self.odd.contains(&c) as u32
        } else {
            self.even.iter().find(|(x, _)| *x == c).map_or(0, |(_, e)| *e)
        }
    }

    /// Product `self * other`; returns the sign flag (true = negative) or
    /// `None` when an odd generator repeats.
    pub fn mul(&self, other: &Monomial) -> Option<(bool, Monomial)> {
        let mut odd = Vec::with_capacity(self.odd.len() + other.odd.len());
        odd.extend_from_slice(&self.odd);
        odd.extend_from_slice(&other.odd);
        let negative = sort_odd(&mut odd)?;
        let mut even = self.even.clone();
        for &(c, e) in &other.even {
            match even.binary_search_by(|(x, _)| x.cmp(&c)) {
                Ok(i) => even[i].1 += e,
                Err(i) => even.insert(i, (c, e)),
            }
        }
        Some((negative, Monomial { even, odd }))
    }
}

/// Canonical-form element of the free supercommutative algebra over the
/// jet coordinates, with exact rational coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SuperExpr {
    terms: BTreeMap<Monomial, Rational>,
}

/// One factor list of an unnormalized term: `coeff * f_1^{e_1} * f_2^{e_2} ...`
/// in the written order.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTerm {
    pub coeff: Rational,
    pub factors: Vec<(Coord, u32)>,
}

impl SuperExpr {
    pub fn zero() -> Self {
        SuperExpr::default()
    }

    pub fn one() -> Self {
        SuperExpr::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        let mut e = SuperExpr::zero();
        e.add_term(Monomial::one(), c);
        e
    }

    pub fn int(n: i64) -> Self {
        SuperExpr::constant(int(n))
    }

    pub fn var(c: Coord) -> Self {
        let m = if c.is_odd() {
            Monomial { even: vec![], odd: vec![c] }
        } else {
            Monomial { even: vec![(c, 1)], odd: vec![] }
        };
        let mut e = SuperExpr::zero();
        e.add_term(m, Rational::one());
        e
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut e = SuperExpr::zero();
        e.add_term(m, c);
        e
    }

    /// Bring a list of written-order terms into canonical form.
    pub fn normalize(raw: &[RawTerm]) -> SuperExpr {
        let mut out = SuperExpr::zero();
        for t in raw {
            let mut acc = SuperExpr::constant(t.coeff.clone());
            for &(c, e) in &t.factors {
                acc = &acc * &SuperExpr::var(c).pow(e);
            }
            out += acc;
        }
        out
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::one())
    }

    pub fn without_constant(&self) -> SuperExpr {
        let mut e = self.clone();
        e.terms.remove(&Monomial::one());
        e
    }

    pub fn scale(&self, c: &Rational) -> SuperExpr {
        if c.is_zero() {
            return SuperExpr::zero();
        }
        SuperExpr { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> SuperExpr {
        let mut acc = SuperExpr::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Common parity of all terms.
    pub fn parity_of(&self) -> Result<Parity, AlgebraError> {
        let mut it = self.terms.keys().map(Monomial::parity);
        let first = it.next().ok_or(AlgebraError::ZeroExpression)?;
        if it.all(|p| p == first) {
            Ok(first)
        } else {
            Err(AlgebraError::MixedParity)
        }
    }

    /// Parity, treating zero as compatible with anything.
    pub fn is_homogeneous(&self, p: Parity) -> bool {
        self.terms.keys().all(|m| m.parity() == p)
    }

    /// Grade involution applied `p` times: negates odd terms when `p` is odd.
    /// Moving `self` past an object of parity `p` multiplies it by this.
    pub fn twist(&self, p: Parity) -> SuperExpr {
        if !p.is_odd() {
            return self.clone();
        }
        SuperExpr {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| {
                    let v = if m.parity().is_odd() { -v } else { v.clone() };
                    (m.clone(), v)
                })
                .collect(),
        }
    }

    pub fn coords(&self) -> BTreeSet<Coord> {
        self.terms.keys().flat_map(|m| m.coords()).collect()
    }

    pub fn max_order(&self) -> Option<u16> {
        self.terms.keys().filter_map(Monomial::max_order).max()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// The body: every odd generator set to zero.
    pub fn body(&self) -> SuperExpr {
        SuperExpr {
            terms: self.terms.iter().filter(|(m, _)| m.odd.is_empty()).map(|(m, v)| (m.clone(), v.clone())).collect(),
        }
    }

    /// Left partial derivative. For an odd `x` the generator is moved to the
    /// front of each term (accruing the Koszul sign) and then deleted.
    pub fn left_partial(&self, x: Coord) -> SuperExpr {
        let mut out = SuperExpr::zero();
        for (m, c) in &self.terms {
            if x.is_odd() {
                if let Some(pos) = m.odd.iter().position(|&o| o == x) {
                    let mut nm = m.clone();
                    nm.odd.remove(pos);
                    let c = if pos % 2 == 1 { -c } else { c.clone() };
                    out.add_term(nm, c);
                }
            } else if let Some(pos) = m.even.iter().position(|(o, _)| *o == x) {
                let mut nm = m.clone();
                let e = nm.even[pos].1;
                if e == 1 {
                    nm.even.remove(pos);
                } else {
                    nm.even[pos].1 = e - 1;
                }
                out.add_term(nm, c * int(e as i64));
            }
        }
        out
    }

    /// Homomorphic substitution; generators without an assignment are kept.
    pub fn substitute(&self, assignment: &BTreeMap<Coord, SuperExpr>) -> Result<SuperExpr, AlgebraError> {
        for (c, v) in assignment {
            if !v.is_homogeneous(c.parity) {
                return Err(AlgebraError::ParityMismatch { coord: *c });
            }
        }
        Ok(self.substitute_unchecked(assignment))
    }

    pub(crate) fn substitute_unchecked(&self, assignment: &BTreeMap<Coord, SuperExpr>) -> SuperExpr {
        if assignment.is_empty() || self.coords().iter().all(|c| !assignment.contains_key(c)) {
            return self.clone();
        }
        let mut out = SuperExpr::zero();
        for (m, c) in &self.terms {
            let mut acc = SuperExpr::constant(c.clone());
            for &(x, e) in &m.even {
                let v = assignment.get(&x).cloned().unwrap_or_else(|| SuperExpr::var(x));
                acc = &acc * &v.pow(e);
            }
            for &x in &m.odd {
                let v = assignment.get(&x).cloned().unwrap_or_else(|| SuperExpr::var(x));
                acc = &acc * &v;
            }
            out += acc;
        }
        out
    }

    /// Multiplicative inverse of an element whose body is a nonzero
    /// constant. The soul is nilpotent, so the geometric series terminates.
    pub fn try_inverse(&self) -> Option<SuperExpr> {
        let body = self.body();
        let c = body.as_constant()?;
        if c.is_zero() {
            return None;
        }
        let cinv = c.recip();
        let soul = (self - &body).scale(&-cinv.clone());
        let mut acc = SuperExpr::one();
        let mut power = SuperExpr::one();
        loop {
            power = &power * &soul;
            if power.is_zero() {
                break;
            }
            acc += power.clone();
        }
        Some(acc.scale(&cinv))
    }

    /// Render with a coordinate naming function.
    pub fn display_with<'a, F>(&'a self, names: F) -> ExprDisplay<'a, F>
    where
        F: Fn(Coord) -> String,
    {
        ExprDisplay { expr: self, names }
    }
}

impl From<Coord> for SuperExpr {
    fn from(c: Coord) -> Self {
        SuperExpr::var(c)
    }
}

impl From<Rational> for SuperExpr {
    fn from(c: Rational) -> Self {
        SuperExpr::constant(c)
    }
}

impl AddAssign for SuperExpr {
    fn add_assign(&mut self, rhs: SuperExpr) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl AddAssign<&SuperExpr> for SuperExpr {
    fn add_assign(&mut self, rhs: &SuperExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&SuperExpr> for SuperExpr {
    fn sub_assign(&mut self, rhs: &SuperExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl Add for &SuperExpr {
    type Output = SuperExpr;
    fn add(self, rhs: &SuperExpr) -> SuperExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for SuperExpr {
    type Output = SuperExpr;
    fn add(mut self, rhs: SuperExpr) -> SuperExpr {
        self += rhs;
        self
    }
}

impl Sub for &SuperExpr {
    type Output = SuperExpr;
    fn sub(self, rhs: &SuperExpr) -> SuperExpr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for SuperExpr {
    type Output = SuperExpr;
    fn sub(mut self, rhs: SuperExpr) -> SuperExpr {
        self -= &rhs;
        self
    }
}

impl Neg for &SuperExpr {
    type Output = SuperExpr;
    fn neg(self) -> SuperExpr {
        SuperExpr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Neg for SuperExpr {
    type Output = SuperExpr;
    fn neg(self) -> SuperExpr {
        -&self
    }
}

impl Mul for &SuperExpr {
    type Output = SuperExpr;
    fn mul(self, rhs: &SuperExpr) -> SuperExpr {
        let mut out = SuperExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                if let Some((negative, m)) = ma.mul(mb) {
                    let c = ca * cb;
                    out.add_term(m, if negative { -c } else { c });
                }
            }
        }
        out
    }
}

impl Mul for SuperExpr {
    type Output = SuperExpr;
    fn mul(self, rhs: SuperExpr) -> SuperExpr {
        &self * &rhs
    }
}

pub struct ExprDisplay<'a, F> {
    expr: &'a SuperExpr,
    names: F,
}

pub(crate) fn fmt_rational(c: &Rational) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl<F: Fn(Coord) -> String> fmt::Display for ExprDisplay<'_, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.expr.terms.iter().enumerate() {
            let negative = c.is_negative();
            let a = c.abs();
            match (i, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let mut factors: Vec<String> = Vec::new();
            for &(x, e) in &m.even {
                if e == 1 {
                    factors.push((self.names)(x));
                } else {
                    factors.push(format!("{}^{}", (self.names)(x), e));
                }
            }
            factors.extend(m.odd.iter().map(|&x| (self.names)(x)));
            if factors.is_empty() {
                f.write_str(&fmt_rational(&a))?;
            } else {
                if !a.is_one() {
                    write!(f, "{}*", fmt_rational(&a))?;
                }
                f.write_str(&factors.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for SuperExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(|c| c.to_string()))
    }
}
