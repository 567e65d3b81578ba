//! Maximum likelihood fitting by Newton-type iteration on the degree
//! equations `d_i = Σ_j p_ij`, `b_j = Σ_i p_ij`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fisher_inverse::build_s;
use crate::graph::{degrees, BipartiteGraph, DegreeSequence, ParameterVector};
use crate::likelihood::{expected_degrees, fisher_info, log_likelihood, score, FisherInfo};

/// Maximum number of step halvings per Newton iteration.
const MAX_HALVINGS: u32 = 30;

/// Largest coordinate move of one Newton iteration. Longer directions are
/// scaled down so a poor start cannot jump into the saturated region where
/// the Fisher information is numerically singular.
const MAX_NEWTON_STEP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Newton with the exact Fisher inverse (structured Schur-complement solve).
    #[serde(alias = "exact")]
    NewtonExact,
    /// Newton with the closed-form approximation `S` of `V⁻¹`, used as the
    /// preconditioner of a short conjugate-gradient solve.
    #[serde(alias = "approx")]
    NewtonApprox,
    /// Multiplicative degree-matching map, one side at a time.
    #[serde(alias = "fixed-point")]
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zeros,
    /// Logits of the observed degree proportions.
    Moment,
    User(ParameterVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub method: Method,
    /// Convergence threshold on `‖F(θ)‖∞`.
    pub tol_score: f64,
    /// Stall threshold on the Newton direction `‖Δθ‖∞`.
    pub tol_step: f64,
    pub max_iter: usize,
    /// Iterates with `‖θ‖∞` above this are declared divergent.
    pub divergence_threshold: f64,
    pub init: Init,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            method: Method::NewtonApprox,
            tol_score: 1e-8,
            tol_step: 1e-10,
            max_iter: 200,
            divergence_threshold: 30.0,
            init: Init::Zeros,
        }
    }
}

impl FitConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.tol_score) || !positive(self.tol_step) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !positive(self.divergence_threshold) {
            return Err(Error::InvalidConfig(
                "divergence threshold must be positive".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a fit with respect to existence of the MLE.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Existence {
    Exists,
    /// Some degree sits at 0 or its maximum, so the MLE cannot exist.
    BoundaryDegree {
        events: Vec<usize>,
        actors: Vec<usize>,
    },
    Diverged,
    MaxIter,
}

impl Existence {
    /// Both a priori and runtime non-existence count as "MLE does not exist".
    pub fn is_nonexistent(&self) -> bool {
        matches!(self, Existence::BoundaryDegree { .. } | Existence::Diverged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: ParameterVector,
    pub converged: bool,
    pub existence: Existence,
    pub iterations: usize,
    pub final_score_norm: f64,
    /// `‖F(θ^(k))‖∞` for each iterate, starting with the initial point.
    pub score_trace: Vec<f64>,
    pub log_likelihood: f64,
}

impl FitResult {
    /// Turns non-existence outcomes into errors, for callers that want them.
    pub fn into_result(self) -> std::result::Result<Self, FitFailure> {
        match &self.existence {
            Existence::Exists => Ok(self),
            Existence::BoundaryDegree { events, actors } => Err(FitFailure::BoundaryDegree {
                events: events.clone(),
                actors: actors.clone(),
            }),
            Existence::Diverged => Err(FitFailure::Diverged {
                norm: self.theta_hat.norm_inf(),
            }),
            Existence::MaxIter => Err(FitFailure::MaxIterations {
                iterations: self.iterations,
                score_norm: self.final_score_norm,
            }),
        }
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum FitFailure {
    #[error("boundary degrees (events {events:?}, actors {actors:?}): the MLE does not exist")]
    BoundaryDegree {
        events: Vec<usize>,
        actors: Vec<usize>,
    },
    #[error("iterates diverged (‖θ‖∞ = {norm:.3})")]
    Diverged { norm: f64 },
    #[error("no convergence after {iterations} iterations (‖F‖∞ = {score_norm:.3e})")]
    MaxIterations { iterations: usize, score_norm: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Precheck {
    Ok,
    /// 0-based indices of events and actors whose degree is 0 or maximal.
    BoundaryDegree {
        events: Vec<usize>,
        actors: Vec<usize>,
    },
}

/// Flags degrees at 0 or their maximum. Passing is necessary for existence
/// but not sufficient.
pub fn existence_precheck(ds: &DegreeSequence) -> Precheck {
    let (m, n) = (ds.m(), ds.n());
    let events: Vec<usize> = (0..m).filter(|&i| ds.d[i] == 0 || ds.d[i] == n).collect();
    let actors: Vec<usize> = (0..n).filter(|&j| ds.b[j] == 0 || ds.b[j] == m).collect();
    if events.is_empty() && actors.is_empty() {
        Precheck::Ok
    } else {
        Precheck::BoundaryDegree { events, actors }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Solves `V Δ = F` exactly by eliminating the larger diagonal block.
pub fn exact_newton_direction(v: &FisherInfo, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: f.len(),
        });
    }
    let mut delta = schur_solve(v, f)?;
    // one round of iterative refinement
    let residual: Vec<f64> = v
        .mul_vec(&delta)
        .iter()
        .zip(f)
        .map(|(vd, fi)| fi - vd)
        .collect();
    let f_norm = max_abs(f);
    if max_abs(&residual) > 1e-10 * f_norm {
        let correction = schur_solve(v, &residual)?;
        for (d, c) in delta.iter_mut().zip(&correction) {
            *d += c;
        }
    }
    let residual = v
        .mul_vec(&delta)
        .iter()
        .zip(f)
        .fold(0.0f64, |acc, (vd, fi)| acc.max((fi - vd).abs()));
    if residual.is_nan() || residual > 1e-8 * f_norm {
        return Err(Error::NumericallySingular);
    }
    Ok(delta)
}

fn schur_solve(v: &FisherInfo, rhs: &[f64]) -> Result<Vec<f64>> {
    let m = v.m();
    let k = v.actor_diag.len();
    let (f, h) = rhs.split_at(m);
    // small side `s` (dense solve), large side `l` (diagonal)
    let eliminate_actors = m <= k;
    let (s_diag, l_diag, s_rhs, l_rhs) = if eliminate_actors {
        (&v.event_diag, &v.actor_diag, f, h)
    } else {
        (&v.actor_diag, &v.event_diag, h, f)
    };
    let cross = |s: usize, l: usize| {
        if eliminate_actors {
            v.cross_at(s, l)
        } else {
            v.cross_at(l, s)
        }
    };
    let ns = s_diag.len();
    let nl = l_diag.len();

    // reduced system (D_s − C D_l⁻¹ Cᵀ) x_s = r_s − C D_l⁻¹ r_l
    let mut reduced = DMatrix::<f64>::zeros(ns, ns);
    let mut reduced_rhs = DVector::<f64>::zeros(ns);
    let mut scaled = vec![0.0; nl];
    for a in 0..ns {
        for (l, sc) in scaled.iter_mut().enumerate() {
            *sc = cross(a, l) / l_diag[l];
        }
        reduced_rhs[a] = s_rhs[a] - scaled.iter().zip(l_rhs).map(|(c, r)| c * r).sum::<f64>();
        for b in 0..=a {
            let dot: f64 = scaled
                .iter()
                .enumerate()
                .map(|(l, c)| c * cross(b, l))
                .sum();
            reduced[(a, b)] = -dot;
            reduced[(b, a)] = -dot;
        }
        reduced[(a, a)] += s_diag[a];
    }
    let x_s = match reduced.clone().cholesky() {
        Some(chol) => chol.solve(&reduced_rhs),
        None => reduced
            .lu()
            .solve(&reduced_rhs)
            .ok_or(Error::NumericallySingular)?,
    };
    let x_l: Vec<f64> = (0..nl)
        .map(|l| {
            let cx: f64 = (0..ns).map(|a| cross(a, l) * x_s[a]).sum();
            (l_rhs[l] - cx) / l_diag[l]
        })
        .collect();
    let mut out = Vec::with_capacity(m + k);
    if eliminate_actors {
        out.extend(x_s.iter());
        out.extend(x_l);
    } else {
        out.extend(x_l);
        out.extend(x_s.iter());
    }
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericallySingular);
    }
    Ok(out)
}

fn newton_direction(v: &FisherInfo, f: &[f64], method: Method) -> Result<Vec<f64>> {
    match method {
        Method::NewtonExact => exact_newton_direction(v, f),
        Method::NewtonApprox => build_s(v)?.apply(f),
        Method::FixedPoint => Err(Error::InvalidConfig(
            "fixed_point has no Newton direction".into(),
        )),
    }
}

const PCG_MAX_ITER: usize = 50;
const PCG_REL_TOL: f64 = 1e-12;

/// Solves `V Δ = F` by conjugate gradients preconditioned with `S`,
/// starting from `Δ = S F`.
///
/// `S V` has its spectrum clustered around 1 apart from one eigenvalue at 2,
/// so plain `θ + S F` iteration never damps that mode; a handful of CG
/// steps remove it at `O(mn)` per step.
pub fn preconditioned_newton_direction(v: &FisherInfo, f: &[f64]) -> Result<Vec<f64>> {
    if f.len() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: f.len(),
        });
    }
    let s = build_s(v)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = s.apply(f)?;
    let vx = v.mul_vec(&x);
    let mut r: Vec<f64> = f.iter().zip(&vx).map(|(a, b)| a - b).collect();
    let target = PCG_REL_TOL * max_abs(f);
    let mut z = s.apply(&r)?;
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..PCG_MAX_ITER {
        if max_abs(&r) <= target || rz <= 0.0 {
            break;
        }
        let vp = v.mul_vec(&p);
        let pvp = dot(&p, &vp);
        if pvp.is_nan() || pvp <= 0.0 {
            break;
        }
        let a = rz / pvp;
        for k in 0..x.len() {
            x[k] += a * p[k];
            r[k] -= a * vp[k];
        }
        z = s.apply(&r)?;
        let rz_next = dot(&r, &z);
        let b = rz_next / rz;
        rz = rz_next;
        for k in 0..p.len() {
            p[k] = z[k] + b * p[k];
        }
    }
    if x.iter().any(|d| !d.is_finite()) {
        return Err(Error::NumericallySingular);
    }
    Ok(x)
}

/// One full Newton step `θ + V⁻¹F` (exact) or `θ + S F` (approximate).
///
/// `f` and `v` must be the score and Fisher information at `theta`.
pub fn newton_step(
    theta: &ParameterVector,
    f: &[f64],
    v: &FisherInfo,
    method: Method,
) -> Result<ParameterVector> {
    if f.len() != theta.dim() || v.dim() != theta.dim() {
        return Err(Error::DimensionMismatch {
            expected: theta.dim(),
            got: f.len(),
        });
    }
    let delta = newton_direction(v, f, method)?;
    let next: Vec<f64> = theta
        .to_flat()
        .iter()
        .zip(&delta)
        .map(|(t, d)| t + d)
        .collect();
    ParameterVector::from_flat(theta.m(), &next)
}

/// One sweep of the degree-matching map: `α_i ← α_i + log(d_i / E d_i)`,
/// then the same for every actor with the updated `α`, then a shift
/// restoring `β_n = 0`.
fn fixed_point_sweep(theta: &ParameterVector, ds: &DegreeSequence) -> Option<ParameterVector> {
    let n = theta.n();
    let (ed, _) = expected_degrees(theta);
    let alpha: Vec<f64> = theta
        .alpha()
        .iter()
        .zip(&ds.d)
        .zip(&ed)
        .map(|((a, &d), e)| a + (d as f64 / e).ln())
        .collect();
    let mut beta_full: Vec<f64> = (0..n).map(|j| theta.beta_full(j)).collect();
    let half = ParameterVector::new(alpha.clone(), beta_full[..n - 1].to_vec()).ok()?;
    let (_, eb) = expected_degrees(&half);
    for (j, b) in beta_full.iter_mut().enumerate() {
        *b += (ds.b[j] as f64 / eb[j]).ln();
    }
    let shift = beta_full[n - 1];
    let alpha = alpha.into_iter().map(|a| a + shift).collect();
    let beta = beta_full[..n - 1].iter().map(|b| b - shift).collect();
    ParameterVector::new(alpha, beta).ok()
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Starting point from degree proportions, shifted so that `β_n = 0`.
pub fn moment_init(ds: &DegreeSequence) -> Result<ParameterVector> {
    let (m, n) = (ds.m(), ds.n());
    let clamp = |p: f64| p.clamp(0.5 / (m * n) as f64, 1.0 - 0.5 / (m * n) as f64);
    let raw_beta: Vec<f64> =
        ds.b.iter()
            .map(|&b| logit(clamp(b as f64 / m as f64)))
            .collect();
    let reference = raw_beta[n - 1];
    let beta: Vec<f64> = raw_beta.iter().map(|b| b - reference).collect();
    let beta_mean = beta.iter().sum::<f64>() / n as f64;
    let alpha =
        ds.d.iter()
            .map(|&d| logit(clamp(d as f64 / n as f64)) - beta_mean)
            .collect();
    ParameterVector::new(alpha, beta[..n - 1].to_vec())
}

/// Fits the MLE. Non-existence is reported in [`FitResult::existence`];
/// errors are reserved for invalid input.
pub fn fit(g: &BipartiteGraph, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let (m, n) = (g.m(), g.n());
    if m < 1 || n < 2 {
        return Err(Error::InvalidGraph(format!(
            "fitting needs m >= 1 and n >= 2, got {m} x {n}"
        )));
    }
    let ds = degrees(g);

    if let Precheck::BoundaryDegree { events, actors } = existence_precheck(&ds) {
        let theta = ParameterVector::zeros(m, n);
        let f = score(g, &theta)?;
        return Ok(FitResult {
            log_likelihood: log_likelihood(g, &theta)?,
            theta_hat: theta,
            converged: false,
            existence: Existence::BoundaryDegree { events, actors },
            iterations: 0,
            final_score_norm: max_abs(&f),
            score_trace: vec![],
        });
    }

    let mut theta = match &cfg.init {
        Init::Zeros => ParameterVector::zeros(m, n),
        Init::Moment => moment_init(&ds)?,
        Init::User(t) => {
            t.check_dims(m, n)?;
            t.clone()
        }
    };
    let mut ll = log_likelihood(g, &theta)?;
    let mut trace = Vec::new();
    let mut existence = Existence::MaxIter;
    let mut iterations = 0;

    let finish = |theta: ParameterVector, existence: Existence, iterations, trace: Vec<f64>| {
        let final_score_norm = max_abs(&score(g, &theta)?);
        let converged = existence == Existence::Exists;
        Ok(FitResult {
            log_likelihood: log_likelihood(g, &theta)?,
            theta_hat: theta,
            converged,
            existence,
            iterations,
            final_score_norm,
            score_trace: trace,
        })
    };

    loop {
        let f = score(g, &theta)?;
        let f_norm = max_abs(&f);
        trace.push(f_norm);
        if f_norm <= cfg.tol_score {
            existence = Existence::Exists;
            break;
        }
        if !f_norm.is_finite() {
            existence = Existence::Diverged;
            break;
        }
        if iterations == cfg.max_iter {
            break;
        }
        iterations += 1;

        let (next, full_step) = match cfg.method {
            Method::FixedPoint => match fixed_point_sweep(&theta, &ds) {
                Some(next) => {
                    let step = max_abs(
                        &next
                            .to_flat()
                            .iter()
                            .zip(theta.to_flat())
                            .map(|(a, b)| a - b)
                            .collect::<Vec<_>>(),
                    );
                    (next, step)
                }
                None => {
                    existence = Existence::Diverged;
                    break;
                }
            },
            method => {
                let v = fisher_info(&theta);
                let dir = match method {
                    Method::NewtonApprox => preconditioned_newton_direction(&v, &f),
                    _ => newton_direction(&v, &f, method),
                };
                let mut delta = match dir {
                    Ok(d) => d,
                    Err(Error::NumericallySingular | Error::SingularAugmented(_)) => {
                        existence = Existence::Diverged;
                        break;
                    }
                    Err(e) => return Err(e),
                };
                let full_step = max_abs(&delta);
                if full_step > MAX_NEWTON_STEP {
                    let scale = MAX_NEWTON_STEP / full_step;
                    delta.iter_mut().for_each(|d| *d *= scale);
                }
                let base = theta.to_flat();
                let slack = 1e-12 * ll.abs().max(1.0);
                let mut t = 1.0;
                let mut accepted = None;
                for _ in 0..=MAX_HALVINGS {
                    let cand: Vec<f64> = base.iter().zip(&delta).map(|(b, d)| b + t * d).collect();
                    if let Ok(cand) = ParameterVector::from_flat(m, &cand) {
                        let cand_ll = log_likelihood(g, &cand)?;
                        if cand_ll >= ll - slack {
                            accepted = Some((cand, cand_ll));
                            break;
                        }
                    }
                    t *= 0.5;
                }
                match accepted {
                    Some((cand, cand_ll)) => {
                        ll = cand_ll;
                        (cand, full_step)
                    }
                    // no ascent along the direction: treat as a stall
                    None => {
                        existence = Existence::MaxIter;
                        break;
                    }
                }
            }
        };
        if next.norm_inf() > cfg.divergence_threshold {
            theta = next;
            existence = Existence::Diverged;
            break;
        }
        theta = next;
        if cfg.method == Method::FixedPoint {
            ll = log_likelihood(g, &theta)?;
        }
        if full_step <= cfg.tol_step {
            let f_norm = max_abs(&score(g, &theta)?);
            trace.push(f_norm);
            existence = if f_norm <= cfg.tol_score {
                Existence::Exists
            } else {
                Existence::MaxIter
            };
            break;
        }
    }
    finish(theta, existence, iterations, trace)
}
