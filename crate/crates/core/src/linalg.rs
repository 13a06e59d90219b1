//! Small linear-algebra kernels: exact rational systems (used by the
//! bounded-degree witness search) and affine systems over the even part of
//! the superalgebra (used to solve for top-order coordinates).

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::algebra::{Coord, Rational, SuperExpr};

/// Sparse row of a rational linear system.
pub type Row = BTreeMap<usize, Rational>;

/// Solve `rows · u = rhs` by Gauss–Jordan elimination, pivoting on the
/// lowest column index first and setting free unknowns to zero. Returns
/// `None` when the system is inconsistent.
pub fn solve_rational(mut rows: Vec<Row>, mut rhs: Vec<Rational>, unknowns: usize) -> Option<Vec<Rational>> {
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next_row = 0;
    for col in 0..unknowns {
        let Some(p) = (next_row..rows.len()).find(|&r| rows[r].get(&col).is_some_and(|v| !v.is_zero())) else {
            continue;
        };
        rows.swap(next_row, p);
        rhs.swap(next_row, p);
        let inv = rows[next_row][&col].recip();
        for v in rows[next_row].values_mut() {
            *v *= &inv;
        }
        rhs[next_row] *= &inv;
        let pivot_row = rows[next_row].clone();
        let pivot_rhs = rhs[next_row].clone();
        for r in 0..rows.len() {
            if r == next_row {
                continue;
            }
            let Some(factor) = rows[r].get(&col).cloned() else { continue };
            for (c, v) in &pivot_row {
                let entry = rows[r].entry(*c).or_insert_with(Rational::zero);
                *entry -= &factor * v;
                if entry.is_zero() {
                    rows[r].remove(c);
                }
            }
            rhs[r] -= &factor * &pivot_rhs;
        }
        pivots.push((next_row, col));
        next_row += 1;
    }
    if (next_row..rows.len()).any(|r| !rhs[r].is_zero()) {
        return None;
    }
    let mut out = vec![Rational::zero(); unknowns];
    for (r, c) in pivots {
        out[c] = rhs[r].clone();
    }
    Some(out)
}

/// Determinant of a square matrix with commuting (even) entries, by
/// cofactor expansion.
pub fn determinant(m: &[Vec<SuperExpr>]) -> SuperExpr {
    match m.len() {
        0 => SuperExpr::one(),
        1 => m[0][0].clone(),
        n => {
            let mut acc = SuperExpr::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<SuperExpr>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| v.clone()).collect())
                    .collect();
                let term = &m[0][j] * &determinant(&minor);
                if j % 2 == 0 {
                    acc += term;
                } else {
                    acc -= &term;
                }
            }
            acc
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AffineSolveError {
    /// An equation is not affine in the unknowns.
    NonAffine { equation: usize },
    /// A column has entries, none of which is a unit of the polynomial superalgebra.
    NoUnitPivot { unknown: Coord },
}

/// Outcome of solving affine equations `Σ_u u·A_u + b = 0` for the listed
/// unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolution {
    /// Pivoted unknowns in terms of parameters and free unknowns.
    pub solved: BTreeMap<Coord, SuperExpr>,
    /// Unknowns left undetermined.
    pub free: Vec<Coord>,
    /// Equations that no longer involve any unknown.
    pub residual: Vec<SuperExpr>,
}

/// Gauss–Jordan elimination over the supercommutative coefficient ring.
/// Rows are scaled and combined by right multiplication, which preserves
/// every equation; pivots must be units (nonzero constant body).
pub fn solve_affine(equations: &[SuperExpr], unknowns: &[Coord]) -> Result<AffineSolution, AffineSolveError> {
    let zero_at: BTreeMap<Coord, SuperExpr> = unknowns.iter().map(|u| (*u, SuperExpr::zero())).collect();
    let mut a: Vec<Vec<SuperExpr>> = Vec::with_capacity(equations.len());
    let mut b: Vec<SuperExpr> = Vec::with_capacity(equations.len());
    for (i, eq) in equations.iter().enumerate() {
        let row: Vec<SuperExpr> = unknowns.iter().map(|u| eq.left_partial(*u)).collect();
        for entry in &row {
            if unknowns.iter().any(|u| !entry.left_partial(*u).is_zero()) {
                return Err(AffineSolveError::NonAffine { equation: i });
            }
        }
        a.push(row);
        b.push(eq.substitute_unchecked(&zero_at));
    }

    let mut pivot_of_row: Vec<Option<usize>> = vec![None; equations.len()];
    let mut free = Vec::new();
    for (col, &u) in unknowns.iter().enumerate() {
        let candidate = (0..a.len())
            .filter(|&r| pivot_of_row[r].is_none())
            .find_map(|r| a[r][col].try_inverse().map(|inv| (r, inv)));
        let Some((p, inv)) = candidate else {
            if (0..a.len()).any(|r| pivot_of_row[r].is_none() && !a[r][col].is_zero()) {
                return Err(AffineSolveError::NoUnitPivot { unknown: u });
            }
            free.push(u);
            continue;
        };
        for v in a[p].iter_mut() {
            *v = &*v * &inv;
        }
        b[p] = &b[p] * &inv;
        let prow = a[p].clone();
        let pb = b[p].clone();
        for r in 0..a.len() {
            if r == p || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in 0..unknowns.len() {
                let d = &prow[c] * &factor;
                a[r][c] -= &d;
            }
            let d = &pb * &factor;
            b[r] -= &d;
        }
        pivot_of_row[p] = Some(col);
    }

    let mut solved = BTreeMap::new();
    let mut residual = Vec::new();
    for r in 0..a.len() {
        match pivot_of_row[r] {
            Some(col) => {
                let mut value = -&b[r];
                for (c, &u) in unknowns.iter().enumerate() {
                    if c != col && !a[r][c].is_zero() {
                        value -= &(&SuperExpr::var(u) * &a[r][c]);
                    }
                }
                solved.insert(unknowns[col], value);
            }
            None => {
                if !b[r].is_zero() {
                    residual.push(b[r].clone());
                }
            }
        }
    }
    Ok(AffineSolution { solved, free, residual })
}

/// True when every entry is zero.
pub fn is_zero_matrix(m: &[Vec<SuperExpr>]) -> bool {
    m.iter().all(|r| r.iter().all(SuperExpr::is_zero))
}
