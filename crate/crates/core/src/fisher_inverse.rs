//! Closed-form approximate inverse of the Fisher information.
//!
//! For `V` in the diagonally dominant class produced by the model, the matrix
//!
//! ```text
//! s_ij =  δ_ij / v_ii + 1 / v_(m+n,m+n)   i, j on the same side
//! s_ij = −1 / v_(m+n,m+n)                 i, j on opposite sides
//! ```
//!
//! approximates `V⁻¹` with max-entry error `O(1 / (mn))` for bounded
//! parameters. It needs `O(m + n)` storage and `O(m + n)` time to apply, so it
//! is never materialized outside of tests and diagnostics.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::likelihood::FisherInfo;

/// Largest dimension the dense oracle will factor.
pub const DENSE_LIMIT: usize = 2000;

/// Stored reciprocals defining the approximate inverse `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxInverse {
    pub inv_event_diag: Vec<f64>,
    pub inv_actor_diag: Vec<f64>,
    pub inv_aug_total: f64,
}

pub fn build_s(v: &FisherInfo) -> Result<ApproxInverse> {
    if v.aug_total <= 0.0 || !v.aug_total.is_finite() {
        return Err(Error::SingularAugmented(v.aug_total));
    }
    let recip = |xs: &[f64]| -> Result<Vec<f64>> {
        xs.iter()
            .map(|&x| {
                let r = 1.0 / x;
                if x > 0.0 && r.is_finite() {
                    Ok(r)
                } else {
                    Err(Error::NumericallySingular)
                }
            })
            .collect()
    };
    Ok(ApproxInverse {
        inv_event_diag: recip(&v.event_diag)?,
        inv_actor_diag: recip(&v.actor_diag)?,
        inv_aug_total: 1.0 / v.aug_total,
    })
}

impl ApproxInverse {
    pub fn m(&self) -> usize {
        self.inv_event_diag.len()
    }

    pub fn dim(&self) -> usize {
        self.inv_event_diag.len() + self.inv_actor_diag.len()
    }

    #[inline]
    fn inv_diag(&self, k: usize) -> f64 {
        let m = self.m();
        if k < m {
            self.inv_event_diag[k]
        } else {
            self.inv_actor_diag[k - m]
        }
    }

    /// Entry `s_{r,c}` (0-based) of the implied full matrix.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let m = self.m();
        let same_side = (r < m) == (c < m);
        let shared = if same_side {
            self.inv_aug_total
        } else {
            -self.inv_aug_total
        };
        if r == c {
            self.inv_diag(r) + shared
        } else {
            shared
        }
    }

    /// `S x` in `O(m + n)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let m = self.m();
        let (events, actors) = x.split_at(m);
        let x_aug = events.iter().sum::<f64>() - actors.iter().sum::<f64>();
        let shift = x_aug * self.inv_aug_total;
        let out = events
            .iter()
            .zip(&self.inv_event_diag)
            .map(|(xi, inv)| xi * inv + shift)
            .chain(
                actors
                    .iter()
                    .zip(&self.inv_actor_diag)
                    .map(|(xj, inv)| xj * inv - shift),
            )
            .collect();
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |r, c| self.entry(r, c))
    }
}

/// `V⁻¹` by dense Cholesky, falling back to LU if Cholesky fails.
pub fn exact_inverse_oracle(v: &FisherInfo) -> Result<DMatrix<f64>> {
    let dim = v.dim();
    if dim > DENSE_LIMIT {
        return Err(Error::TooLarge {
            dim,
            limit: DENSE_LIMIT,
        });
    }
    let dense = v.to_dense();
    let inverse = match dense.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => dense
            .clone()
            .lu()
            .try_inverse()
            .ok_or(Error::NumericallySingular)?,
    };
    if !inverse.iter().all(|x| x.is_finite()) {
        return Err(Error::NumericallySingular);
    }
    let residual = (&dense * &inverse - DMatrix::identity(dim, dim)).amax();
    if residual > 1e-8 {
        return Err(Error::NumericallySingular);
    }
    Ok(inverse)
}

/// Approximation quality of `S` against the exact inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxError {
    /// `max_ij |(V⁻¹)_ij − s_ij|`.
    pub max_abs_err: f64,
    /// `max_abs_err · q³ m n / Q²`, an empirical stand-in for the constant
    /// in the `O(1/(mn))` bound.
    pub bound_ratio: f64,
    /// Smallest off-diagonal magnitude of `V` (cross and augmented entries).
    pub q: f64,
    /// Largest off-diagonal magnitude of `V`.
    pub big_q: f64,
}

pub fn inverse_approx_error(v: &FisherInfo) -> Result<ApproxError> {
    let exact = exact_inverse_oracle(v)?;
    let s = build_s(v)?;
    let dim = v.dim();
    let mut max_abs_err = 0.0f64;
    for c in 0..dim {
        for r in 0..dim {
            max_abs_err = max_abs_err.max((exact[(r, c)] - s.entry(r, c)).abs());
        }
    }
    let (mut q, mut big_q) = (f64::INFINITY, 0.0f64);
    for &x in v.cross.iter().chain(&v.aug_row) {
        q = q.min(x);
        big_q = big_q.max(x);
    }
    let (m, n) = (v.m() as f64, v.n() as f64);
    Ok(ApproxError {
        max_abs_err,
        bound_ratio: max_abs_err * q.powi(3) * m * n / (big_q * big_q),
        q,
        big_q,
    })
}
