//! Edge probabilities, log-likelihood, score and Fisher information.
//!
//! All sums run in a fixed row-major order, so results are bitwise
//! reproducible.

use crate::error::Result;
use crate::graph::{degrees, BipartiteGraph, ParameterVector};

/// Logistic edge probability `e^{a+b} / (1 + e^{a+b})`.
#[inline]
pub fn edge_probability(alpha_i: f64, beta_j: f64) -> f64 {
    logistic(alpha_i + beta_j)
}

#[inline]
pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
pub(crate) fn log1p_exp(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `p(1 - p)` for `p = logistic(z)`, accurate in both tails.
#[inline]
fn logistic_variance(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

pub fn log_likelihood(g: &BipartiteGraph, theta: &ParameterVector) -> Result<f64> {
    theta.check_dims(g.m(), g.n())?;
    let ds = degrees(g);
    let mut linear = 0.0;
    for (a, &d) in theta.alpha().iter().zip(&ds.d) {
        linear += a * d as f64;
    }
    for (b, &deg) in theta.beta().iter().zip(&ds.b) {
        linear += b * deg as f64;
    }
    let mut log_partition = 0.0;
    for &a in theta.alpha() {
        for j in 0..g.n() {
            log_partition += log1p_exp(a + theta.beta_full(j));
        }
    }
    Ok(linear - log_partition)
}

/// Expected event degrees and expected degrees of all `n` actors under `theta`.
pub fn expected_degrees(theta: &ParameterVector) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (theta.m(), theta.n());
    let mut ed = vec![0.0; m];
    let mut eb = vec![0.0; n];
    for (i, &a) in theta.alpha().iter().enumerate() {
        for (j, eb_j) in eb.iter_mut().enumerate() {
            let p = edge_probability(a, theta.beta_full(j));
            ed[i] += p;
            *eb_j += p;
        }
    }
    (ed, eb)
}

/// `F(θ) = g − E_θ g` over the `m + n − 1` free coordinates.
pub fn score(g: &BipartiteGraph, theta: &ParameterVector) -> Result<Vec<f64>> {
    theta.check_dims(g.m(), g.n())?;
    let ds = degrees(g);
    let (ed, eb) = expected_degrees(theta);
    let mut f = Vec::with_capacity(theta.dim());
    f.extend(ds.d.iter().zip(&ed).map(|(&d, e)| d as f64 - e));
    f.extend(
        ds.b.iter()
            .zip(&eb)
            .take(g.n() - 1)
            .map(|(&b, e)| b as f64 - e),
    );
    Ok(f)
}

/// Fisher information `V = −F′(θ)` stored by structure.
///
/// The full `(m+n−1)²` matrix has diagonal blocks that are themselves
/// diagonal, so only the two diagonals, the event–actor cross block and the
/// augmented entries against the reference actor are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherInfo {
    /// `v_{i,i}` for events.
    pub event_diag: Vec<f64>,
    /// `v_{m+j,m+j}` for the `n − 1` free actors.
    pub actor_diag: Vec<f64>,
    /// Row-major `m × (n−1)` block `v_{i,m+j} = p_ij (1 − p_ij)`.
    pub cross: Vec<f64>,
    /// `v_{i,m+n}`: each event's variance term against the reference actor.
    pub aug_row: Vec<f64>,
    /// `v_{m+n,m+n} = Σ_i v_{i,m+n}`.
    pub aug_total: f64,
}

impl FisherInfo {
    pub fn m(&self) -> usize {
        self.event_diag.len()
    }

    /// Number of actors including the reference actor.
    pub fn n(&self) -> usize {
        self.actor_diag.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.event_diag.len() + self.actor_diag.len()
    }

    #[inline]
    pub fn cross_at(&self, i: usize, j: usize) -> f64 {
        self.cross[i * self.actor_diag.len() + j]
    }

    /// Diagonal entry `k` of the full matrix (events first, then actors).
    pub fn diag(&self, k: usize) -> f64 {
        let m = self.m();
        if k < m {
            self.event_diag[k]
        } else {
            self.actor_diag[k - m]
        }
    }

    /// Entry `(r, c)` of the full `(m+n−1)²` matrix, 0-based.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let m = self.m();
        match (r < m, c < m) {
            (true, true) | (false, false) if r == c => self.diag(r),
            (true, true) | (false, false) => 0.0,
            (true, false) => self.cross_at(r, c - m),
            (false, true) => self.cross_at(c, r - m),
        }
    }

    /// Multiplies the full matrix by `x` without materializing it.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let (m, k) = (self.m(), self.actor_diag.len());
        let mut out = vec![0.0; m + k];
        for i in 0..m {
            let row = &self.cross[i * k..(i + 1) * k];
            let mut acc = self.event_diag[i] * x[i];
            for (j, &c) in row.iter().enumerate() {
                acc += c * x[m + j];
                out[m + j] += c * x[i];
            }
            out[i] = acc;
        }
        for j in 0..k {
            out[m + j] += self.actor_diag[j] * x[m + j];
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let dim = self.dim();
        nalgebra::DMatrix::from_fn(dim, dim, |r, c| self.entry(r, c))
    }

    /// Scales every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        Self {
            event_diag: s(&self.event_diag),
            actor_diag: s(&self.actor_diag),
            cross: s(&self.cross),
            aug_row: s(&self.aug_row),
            aug_total: self.aug_total * c,
        }
    }
}

/// Fisher information at `theta`. It depends on the parameters alone.
pub fn fisher_info(theta: &ParameterVector) -> FisherInfo {
    let (m, n) = (theta.m(), theta.n());
    let k = n - 1;
    let mut cross = vec![0.0; m * k];
    let mut event_diag = vec![0.0; m];
    let mut actor_diag = vec![0.0; k];
    let mut aug_row = vec![0.0; m];
    for (i, &a) in theta.alpha().iter().enumerate() {
        let row = &mut cross[i * k..(i + 1) * k];
        let mut sum = 0.0;
        for (j, (c, &b)) in row.iter_mut().zip(theta.beta()).enumerate() {
            let v = logistic_variance(a + b);
            *c = v;
            sum += v;
            actor_diag[j] += v;
        }
        let v_ref = logistic_variance(a);
        aug_row[i] = v_ref;
        event_diag[i] = sum + v_ref;
    }
    let aug_total = aug_row.iter().sum();
    FisherInfo {
        event_diag,
        actor_diag,
        cross,
        aug_row,
        aug_total,
    }
}

/// Class bounds `(q, Q)` with `q ≤ v_{i,m+j} ≤ Q` for every cross entry.
pub fn membership_bounds(theta: &ParameterVector) -> (f64, f64) {
    let e = (2.0 * theta.norm_inf()).exp();
    let q = if e.is_finite() {
        e / ((1.0 + e) * (1.0 + e))
    } else {
        0.0
    };
    (q, 0.25)
}
