//! Tridiagonal systems and the Thomas elimination.
//!
//! Every matrix the scheme assembles is strictly diagonally dominant with
//! nonpositive off-diagonals, so elimination needs no pivoting and the
//! solve preserves nonnegativity of nonnegative right-hand sides.

use crate::Real;

use super::SolverError;

/// A tridiagonal matrix stored as three diagonals; `lower` and `upper` have
/// one entry fewer than `diag`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal<T: Real> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// `|diag_n| > |lower_n| + |upper_n|` at every row.
    pub fn is_strictly_dominant(&self) -> bool {
        let n = self.diag.len();
        (0..n).all(|i| {
            let mut off = T::zero();
            if i > 0 {
                off = off + self.lower[i - 1].abs();
            }
            if i + 1 < n {
                off = off + self.upper[i].abs();
            }
            self.diag[i].abs() > off
        })
    }

    /// Smallest `|diag_n| - (|lower_n| + |upper_n|)` across rows.
    pub fn dominance_margin(&self) -> T {
        let n = self.diag.len();
        let mut margin = T::infinity();
        for i in 0..n {
            let mut off = T::zero();
            if i > 0 {
                off = off + self.lower[i - 1].abs();
            }
            if i + 1 < n {
                off = off + self.upper[i].abs();
            }
            margin = margin.min(self.diag[i].abs() - off);
        }
        margin
    }

    /// `T x`, for residual checks.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v = v + self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v = v + self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }
}

/// Solve `T x = rhs` by the Thomas algorithm.
///
/// Strict diagonal dominance is a precondition; its violation signals a
/// mis-assembled step matrix and is reported as an error rather than
/// risking an unstable elimination.
pub fn thomas_solve<T: Real>(t: &Tridiagonal<T>, rhs: &[T]) -> Result<Vec<T>, SolverError> {
    let n = t.diag.len();
    if n == 0 || t.lower.len() != n - 1 || t.upper.len() != n - 1 || rhs.len() != n {
        return Err(SolverError::ShapeMismatch);
    }
    if !t.is_strictly_dominant() {
        return Err(SolverError::DominanceViolation { step: None });
    }
    let mut d = t.diag.clone();
    let mut x = rhs.to_vec();
    for i in 1..n {
        let w = t.lower[i - 1] / d[i - 1];
        d[i] = d[i] - w * t.upper[i - 1];
        x[i] = x[i] - w * x[i - 1];
    }
    x[n - 1] = x[n - 1] / d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (x[i] - t.upper[i] * x[i + 1]) / d[i];
    }
    Ok(x)
}
