//! Monte-Carlo studies: CI coverage for parameter contrasts, QQ data for
//! standardized estimates, and the decay of the max-norm estimation error.
//!
//! Replication `r` always uses seed `base_seed + r`, and tallies are reduced
//! in replication order, so every report is independent of thread count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fisher_inverse::build_s;
use crate::graph::ParameterVector;
use crate::inference::{confidence_interval, contrast_se, Side};
use crate::likelihood::{fisher_info, FisherInfo};
use crate::sampler::{sample_graph, Scenario};
use crate::solver::{fit, Existence, FitConfig};

/// A same-side contrast `θ_i − θ_j`, indices 1-based as printed in tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub side: Side,
    pub i: usize,
    pub j: usize,
}

impl Pair {
    pub fn event(i: usize, j: usize) -> Self {
        Self {
            side: Side::Event,
            i,
            j,
        }
    }

    pub fn actor(i: usize, j: usize) -> Self {
        Self {
            side: Side::Actor,
            i,
            j,
        }
    }

    fn validate(&self, m: usize, n: usize) -> Result<()> {
        let len = match self.side {
            Side::Event => m,
            Side::Actor => n,
        };
        for k in [self.i, self.j] {
            if k == 0 || k > len {
                return Err(Error::IndexOutOfRange { index: k, len });
            }
        }
        if self.i == self.j {
            return Err(Error::SameIndex(self.i));
        }
        Ok(())
    }

    fn value(&self, theta: &ParameterVector) -> f64 {
        let get = |k: usize| match self.side {
            Side::Event => theta.alpha()[k - 1],
            Side::Actor => theta.beta_full(k - 1),
        };
        get(self.i) - get(self.j)
    }

    /// Standardized contrast `[θ̂_i − θ̂_j − (θ*_i − θ*_j)] / (1/v̂_ii + 1/v̂_jj)^{1/2}`.
    fn standardized(
        &self,
        hat: &ParameterVector,
        v_hat: &FisherInfo,
        star: &ParameterVector,
    ) -> Result<f64> {
        let se = contrast_se(v_hat, self.side, self.i - 1, self.j - 1)?;
        Ok((self.value(hat) - self.value(star)) / se)
    }
}

impl std::fmt::Display for Pair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({},{})", self.side, self.i, self.j)
    }
}

impl std::str::FromStr for Pair {
    type Err = Error;

    /// Parses `alpha(1,2)`, `beta(100,101)`, `a1-2` or `b100-101`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse pair {s:?}"));
        let s = s.trim();
        let (side, rest) = if let Some(r) = s.strip_prefix("alpha") {
            (Side::Event, r)
        } else if let Some(r) = s.strip_prefix("beta") {
            (Side::Actor, r)
        } else if let Some(r) = s.strip_prefix('a') {
            (Side::Event, r)
        } else if let Some(r) = s.strip_prefix('b') {
            (Side::Actor, r)
        } else {
            return Err(bad());
        };
        let rest = rest.trim_start_matches('(').trim_end_matches(')');
        let (i, j) = rest.split_once([',', '-']).ok_or_else(bad)?;
        let i = i.trim().parse().map_err(|_| bad())?;
        let j = j.trim().parse().map_err(|_| bad())?;
        Ok(Self { side, i, j })
    }
}

/// One fitted replication; `None` when the MLE was not obtained.
struct Replicate {
    existence: Existence,
    fitted: Option<(ParameterVector, FisherInfo)>,
}

fn replicate(scenario: &Scenario, cfg: &FitConfig, seed: u64) -> Result<Replicate> {
    let g = sample_graph(&scenario.theta_star, seed);
    let r = fit(&g, cfg)?;
    let fitted = (r.existence == Existence::Exists).then(|| {
        let v = fisher_info(&r.theta_hat);
        (r.theta_hat, v)
    });
    Ok(Replicate {
        existence: r.existence,
        fitted,
    })
}

fn run_replications(
    scenario: &Scenario,
    cfg: &FitConfig,
    reps: usize,
    seed: u64,
) -> Result<Vec<Replicate>> {
    (0..reps)
        .into_par_iter()
        .map(|r| replicate(scenario, cfg, seed.wrapping_add(r as u64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCoverage {
    pub pair: Pair,
    /// Percentage of existing-MLE replications whose interval covered the
    /// true contrast; absent when no replication produced an MLE.
    pub coverage_pct: Option<f64>,
    /// Mean interval length over the same replications.
    pub mean_ci_length: Option<f64>,
    pub replications_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub m: usize,
    pub n: usize,
    pub l_kind: String,
    pub l_alpha: f64,
    pub l_beta: f64,
    pub level: f64,
    pub seed: u64,
    pub pairs: Vec<PairCoverage>,
    /// Replications where the MLE does not exist (boundary degree or divergence).
    pub nonexistence_pct: f64,
    /// Replications that hit the iteration cap without a verdict.
    pub unconverged: usize,
    pub total_replications: usize,
}

impl CoverageReport {
    pub fn pair(&self, pair: Pair) -> Option<&PairCoverage> {
        self.pairs.iter().find(|p| p.pair == pair)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "m,n,L_kind,L_alpha,L_beta,level,side,i,j,coverage_pct,mean_ci_length,replications_used,nonexistence_pct,total_replications\n",
        );
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{},{},{},{},{},{},{},{:.6},{}",
                self.m,
                self.n,
                self.l_kind,
                self.l_alpha,
                self.l_beta,
                self.level,
                p.pair.side,
                p.pair.i,
                p.pair.j,
                opt(p.coverage_pct),
                opt(p.mean_ci_length),
                p.replications_used,
                self.nonexistence_pct,
                self.total_replications
            );
        }
        out
    }
}

/// Coverage of Wald intervals for the given contrasts. Coverage and length
/// are conditional on the MLE existing; non-existence is tallied separately.
pub fn run_coverage(
    scenario: &Scenario,
    pairs: &[Pair],
    reps: usize,
    seed: u64,
    level: f64,
    cfg: &FitConfig,
) -> Result<CoverageReport> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    for p in pairs {
        p.validate(scenario.m, scenario.n)?;
    }
    confidence_interval(0.0, 1.0, level)?;
    let results = run_replications(scenario, cfg, reps, seed)?;

    let mut covered = vec![0usize; pairs.len()];
    let mut length_sum = vec![0.0f64; pairs.len()];
    let mut used = 0usize;
    let mut nonexistent = 0usize;
    let mut unconverged = 0usize;
    for rep in &results {
        match &rep.fitted {
            Some((hat, v_hat)) => {
                used += 1;
                for (k, p) in pairs.iter().enumerate() {
                    let se = contrast_se(v_hat, p.side, p.i - 1, p.j - 1)?;
                    let ci = confidence_interval(p.value(hat), se, level)?;
                    covered[k] += usize::from(ci.contains(p.value(&scenario.theta_star)));
                    length_sum[k] += ci.length();
                }
            }
            None if rep.existence.is_nonexistent() => nonexistent += 1,
            None => unconverged += 1,
        }
    }
    let pct = |k: usize, total: usize| 100.0 * k as f64 / total as f64;
    let pairs = pairs
        .iter()
        .enumerate()
        .map(|(k, &pair)| PairCoverage {
            pair,
            coverage_pct: (used > 0).then(|| pct(covered[k], used)),
            mean_ci_length: (used > 0).then(|| length_sum[k] / used as f64),
            replications_used: used,
        })
        .collect();
    Ok(CoverageReport {
        m: scenario.m,
        n: scenario.n,
        l_kind: scenario.l_kind.to_string(),
        l_alpha: scenario.l_alpha,
        l_beta: scenario.l_beta,
        level,
        seed,
        pairs,
        nonexistence_pct: pct(nonexistent, reps),
        unconverged,
        total_replications: reps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QQTarget {
    /// Standardized event contrast `ξ̂_ij`.
    Xi(usize, usize),
    /// Standardized actor contrast `η̂_ij`.
    Eta(usize, usize),
    /// A single parameter standardized by its plug-in SE `ŝ_kk^{1/2}`.
    Single(Side, usize),
}

impl std::fmt::Display for QQTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QQTarget::Xi(i, j) => write!(f, "xi_{i}_{j}"),
            QQTarget::Eta(i, j) => write!(f, "eta_{i}_{j}"),
            QQTarget::Single(side, k) => write!(f, "{side}_{k}"),
        }
    }
}

impl From<Pair> for QQTarget {
    fn from(p: Pair) -> Self {
        match p.side {
            Side::Event => QQTarget::Xi(p.i, p.j),
            Side::Actor => QQTarget::Eta(p.i, p.j),
        }
    }
}

impl QQTarget {
    fn validate(&self, m: usize, n: usize) -> Result<()> {
        match *self {
            QQTarget::Xi(i, j) => Pair::event(i, j).validate(m, n),
            QQTarget::Eta(i, j) => Pair::actor(i, j).validate(m, n),
            QQTarget::Single(side, k) => {
                // the reference actor is fixed and has no SE
                let len = match side {
                    Side::Event => m,
                    Side::Actor => n - 1,
                };
                if k == 0 || k > len {
                    return Err(Error::IndexOutOfRange { index: k, len });
                }
                Ok(())
            }
        }
    }

    fn statistic(
        &self,
        hat: &ParameterVector,
        v_hat: &FisherInfo,
        star: &ParameterVector,
    ) -> Result<f64> {
        match *self {
            QQTarget::Xi(i, j) => Pair::event(i, j).standardized(hat, v_hat, star),
            QQTarget::Eta(i, j) => Pair::actor(i, j).standardized(hat, v_hat, star),
            QQTarget::Single(side, k) => {
                let idx = match side {
                    Side::Event => k - 1,
                    Side::Actor => hat.m() + k - 1,
                };
                let s = build_s(v_hat)?;
                let (h, t) = (hat.to_flat(), star.to_flat());
                Ok((h[idx] - t[idx]) / s.entry(idx, idx).sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QQExport {
    pub target: QQTarget,
    /// Standard normal quantiles at plotting positions `(k − 0.5)/R`.
    pub theoretical: Vec<f64>,
    /// Sorted standardized statistics from existing-MLE replications.
    pub empirical: Vec<f64>,
}

impl QQExport {
    pub fn from_sample(target: QQTarget, mut sample: Vec<f64>) -> Self {
        sample.sort_by(f64::total_cmp);
        let theoretical = normal_plotting_positions(sample.len());
        Self {
            target,
            theoretical,
            empirical: sample,
        }
    }

    /// Kolmogorov–Smirnov distance of the sample from `N(0, 1)`.
    pub fn ks_statistic(&self) -> f64 {
        ks_statistic(&self.empirical)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theoretical,empirical\n");
        for (t, e) in self.theoretical.iter().zip(&self.empirical) {
            let _ = writeln!(out, "{t:.10},{e:.10}");
        }
        out
    }
}

fn normal_plotting_positions(len: usize) -> Vec<f64> {
    let normal = Normal::standard();
    (1..=len)
        .map(|k| normal.inverse_cdf((k as f64 - 0.5) / len as f64))
        .collect()
}

/// One-sample KS statistic `sup |F_n(x) − Φ(x)|`.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let normal = Normal::standard();
    let len = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let cdf = normal.cdf(x);
            let above = (k + 1) as f64 / len - cdf;
            let below = cdf - k as f64 / len;
            above.max(below)
        })
        .fold(0.0, f64::max)
}

pub fn run_qq(
    scenario: &Scenario,
    targets: &[QQTarget],
    reps: usize,
    seed: u64,
    cfg: &FitConfig,
) -> Result<Vec<QQExport>> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    for t in targets {
        t.validate(scenario.m, scenario.n)?;
    }
    let results = run_replications(scenario, cfg, reps, seed)?;
    let mut samples = vec![Vec::with_capacity(reps); targets.len()];
    for (hat, v_hat) in results.iter().filter_map(|r| r.fitted.as_ref()) {
        for (t, sample) in targets.iter().zip(samples.iter_mut()) {
            sample.push(t.statistic(hat, v_hat, &scenario.theta_star)?);
        }
    }
    Ok(targets
        .iter()
        .zip(samples)
        .map(|(&t, s)| QQExport::from_sample(t, s))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub m: usize,
    pub n: usize,
    /// Mean of `‖θ̂ − θ*‖∞` over existing-MLE replications.
    pub mean_error: f64,
    /// Nearest-rank 90th percentile of the same errors.
    pub p90_error: f64,
    pub replications_used: usize,
    pub total_replications: usize,
}

pub fn consistency_csv(rows: &[ConsistencyRow]) -> String {
    let mut out = String::from("m,n,mean_error,p90_error,replications_used,total_replications\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.8},{:.8},{},{}",
            r.m, r.n, r.mean_error, r.p90_error, r.replications_used, r.total_replications
        );
    }
    out
}

/// Max-norm estimation error for each scenario, typically with growing `n`.
pub fn run_consistency(
    scenarios: &[Scenario],
    reps: usize,
    seed: u64,
    cfg: &FitConfig,
) -> Result<Vec<ConsistencyRow>> {
    if reps == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    scenarios
        .iter()
        .map(|sc| {
            let star = sc.theta_star.to_flat();
            let results = run_replications(sc, cfg, reps, seed)?;
            let mut errors: Vec<f64> = results
                .iter()
                .filter_map(|r| r.fitted.as_ref())
                .map(|(hat, _)| {
                    hat.to_flat()
                        .iter()
                        .zip(&star)
                        .fold(0.0f64, |acc, (h, s)| acc.max((h - s).abs()))
                })
                .collect();
            errors.sort_by(f64::total_cmp);
            let used = errors.len();
            let (mean_error, p90_error) = if used == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let rank = ((0.9 * used as f64).ceil() as usize).clamp(1, used);
                (errors.iter().sum::<f64>() / used as f64, errors[rank - 1])
            };
            Ok(ConsistencyRow {
                m: sc.m,
                n: sc.n,
                mean_error,
                p90_error,
                replications_used: used,
                total_replications: reps,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{make_scenario, LKind};

    #[test]
    fn parses_pairs() {
        assert_eq!("alpha(1,2)".parse::<Pair>().unwrap(), Pair::event(1, 2));
        assert_eq!("b100-101".parse::<Pair>().unwrap(), Pair::actor(100, 101));
        assert!("gamma(1,2)".parse::<Pair>().is_err());
        assert!("a1".parse::<Pair>().is_err());
        assert_eq!(Pair::actor(3, 4).to_string(), "beta(3,4)");
    }

    #[test]
    fn single_replication_qq() {
        let q = QQExport::from_sample(QQTarget::Xi(1, 2), vec![0.7]);
        assert_eq!(q.theoretical, vec![0.0]);
        assert_eq!(q.empirical, vec![0.7]);
        assert_eq!(q.to_csv().lines().next(), Some("theoretical,empirical"));
    }

    #[test]
    fn ks_of_quantiles_is_small() {
        let x = normal_plotting_positions(1000);
        assert!(ks_statistic(&x) <= 0.5 / 1000.0 + 1e-9);
        let shifted: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
        assert!(ks_statistic(&shifted) > 0.3);
    }

    #[test]
    fn coverage_rejects_bad_pairs() {
        let sc = make_scenario(5, 6, LKind::Zero).unwrap();
        let cfg = FitConfig::default();
        assert!(run_coverage(&sc, &[Pair::event(1, 6)], 2, 1, 0.95, &cfg).is_err());
        assert!(run_coverage(&sc, &[Pair::event(2, 2)], 2, 1, 0.95, &cfg).is_err());
        assert!(run_coverage(&sc, &[Pair::event(1, 2)], 0, 1, 0.95, &cfg).is_err());
        assert!(run_qq(&sc, &[QQTarget::Single(Side::Actor, 6)], 2, 1, &cfg).is_err());
    }

    #[test]
    fn coverage_is_deterministic() {
        let sc = make_scenario(15, 20, LKind::Zero).unwrap();
        let cfg = FitConfig::default();
        let pairs = [Pair::event(1, 2), Pair::actor(19, 20)];
        let a = run_coverage(&sc, &pairs, 40, 9, 0.95, &cfg).unwrap();
        let b = run_coverage(&sc, &pairs, 40, 9, 0.95, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
        let p = a.pair(pairs[0]).unwrap();
        assert!(p.coverage_pct.unwrap() <= 100.0);
        assert_eq!(
            p.replications_used + (a.nonexistence_pct * 0.4).round() as usize + a.unconverged,
            40
        );
    }

    #[test]
    fn saturated_scenario_has_no_coverage() {
        let sc = make_scenario(10, 12, LKind::Value(12.0)).unwrap();
        let r = run_coverage(&sc, &[Pair::event(1, 2)], 5, 1, 0.95, &FitConfig::default()).unwrap();
        assert_eq!(r.nonexistence_pct, 100.0);
        assert_eq!(r.pairs[0].coverage_pct, None);
        assert!(r.to_csv().contains(",,,0,100.000000,5"));
    }
}
