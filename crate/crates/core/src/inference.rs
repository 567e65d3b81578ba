//! Wald inference from the plug-in covariance `S(θ̂)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fisher_inverse::{build_s, ApproxInverse};
use crate::graph::ParameterVector;
use crate::likelihood::{fisher_info, FisherInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Event,
    Actor,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Event => "alpha",
            Side::Actor => "beta",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Asymptotic covariance of `θ̂` with `θ̂` plugged into `S`.
pub fn plugin_covariance(theta_hat: &ParameterVector) -> Result<ApproxInverse> {
    build_s(&fisher_info(theta_hat))
}

/// Diagonal Fisher entry for a same-side contrast; the reference actor
/// (0-based index `n − 1`) uses `v_(m+n,m+n)`.
fn side_diag(v: &FisherInfo, side: Side, k: usize) -> Result<f64> {
    match side {
        Side::Event if k < v.m() => Ok(v.event_diag[k]),
        Side::Event => Err(Error::IndexOutOfRange {
            index: k + 1,
            len: v.m(),
        }),
        Side::Actor if k < v.actor_diag.len() => Ok(v.actor_diag[k]),
        Side::Actor if k == v.actor_diag.len() => Ok(v.aug_total),
        Side::Actor => Err(Error::IndexOutOfRange {
            index: k + 1,
            len: v.n(),
        }),
    }
}

/// Standard error `(1/v_ii + 1/v_jj)^{1/2}` of `θ_i − θ_j` for two
/// same-side parameters, 0-based.
pub fn contrast_se(v: &FisherInfo, side: Side, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::SameIndex(i + 1));
    }
    let vi = side_diag(v, side, i)?;
    let vj = side_diag(v, side, j)?;
    Ok((1.0 / vi + 1.0 / vj).sqrt())
}

/// Upper `(1 + level) / 2` standard normal quantile.
pub fn normal_quantile_two_sided(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::BadLevel(level));
    }
    let z = match level {
        0.90 => 1.644_853_626_951_472_2,
        0.95 => 1.959_963_984_540_054,
        0.99 => 2.575_829_303_548_900_4,
        l => Normal::standard().inverse_cdf(0.5 + l / 2.0),
    };
    Ok(z)
}

pub fn confidence_interval(estimate: f64, se: f64, level: f64) -> Result<Interval> {
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::BadStandardError(se));
    }
    let half = normal_quantile_two_sided(level)? * se;
    Ok(Interval {
        low: estimate - half,
        high: estimate + half,
    })
}

/// Standard errors and Wald intervals for every free parameter.
///
/// The reference actor `β_n = 0` is a constraint and gets no entry.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub se_alpha: Vec<f64>,
    pub se_beta: Vec<f64>,
    pub ci_level: f64,
    pub ci_alpha: Vec<Interval>,
    pub ci_beta: Vec<Interval>,
    fisher: FisherInfo,
    theta_hat: ParameterVector,
}

impl InferenceResult {
    pub fn fisher(&self) -> &FisherInfo {
        &self.fisher
    }

    /// Wald interval for `θ_i − θ_j`, both on `side`, 0-based.
    pub fn contrast_interval(&self, side: Side, i: usize, j: usize) -> Result<Interval> {
        let se = contrast_se(&self.fisher, side, i, j)?;
        let value = |k: usize| match side {
            Side::Event => self.theta_hat.alpha()[k],
            Side::Actor => self.theta_hat.beta_full(k),
        };
        confidence_interval(value(i) - value(j), se, self.ci_level)
    }
}

pub fn infer(theta_hat: &ParameterVector, level: f64) -> Result<InferenceResult> {
    normal_quantile_two_sided(level)?;
    let fisher = fisher_info(theta_hat);
    let s = build_s(&fisher)?;
    let m = theta_hat.m();
    let se: Vec<f64> = (0..s.dim()).map(|k| s.entry(k, k).sqrt()).collect();
    let intervals = |est: &[f64], se: &[f64]| -> Result<Vec<Interval>> {
        est.iter()
            .zip(se)
            .map(|(&e, &s)| confidence_interval(e, s, level))
            .collect()
    };
    let ci_alpha = intervals(theta_hat.alpha(), &se[..m])?;
    let ci_beta = intervals(theta_hat.beta(), &se[m..])?;
    Ok(InferenceResult {
        se_alpha: se[..m].to_vec(),
        se_beta: se[m..].to_vec(),
        ci_level: level,
        ci_alpha,
        ci_beta,
        fisher,
        theta_hat: theta_hat.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plugin_variances_at_zero() {
        let s = plugin_covariance(&ParameterVector::zeros(2, 2)).unwrap();
        assert_eq!(
            (0..3).map(|k| s.entry(k, k)).collect::<Vec<_>>(),
            vec![4.0; 3]
        );
        let s = plugin_covariance(&ParameterVector::zeros(30, 30)).unwrap();
        assert!((s.entry(0, 0) - (4.0 / 30.0 + 4.0 / 30.0)).abs() < 1e-14);
    }

    #[test]
    fn contrast_se_examples() {
        let v = fisher_info(&ParameterVector::zeros(100, 200));
        let se = contrast_se(&v, Side::Event, 0, 1).unwrap();
        assert!((se - 0.2).abs() < 1e-14);
        assert_eq!(se, contrast_se(&v, Side::Event, 1, 0).unwrap());
        assert_eq!(contrast_se(&v, Side::Event, 3, 3), Err(Error::SameIndex(4)));
        assert!(contrast_se(&v, Side::Event, 0, 100).is_err());
        // reference actor uses the augmented total, which is m/4 at zero
        let se = contrast_se(&v, Side::Actor, 0, 199).unwrap();
        assert!((se - (8.0f64 / 100.0).sqrt()).abs() < 1e-14);
        assert!(contrast_se(&v, Side::Actor, 0, 200).is_err());
    }

    #[test]
    fn contrast_matches_dense_s() {
        let theta = ParameterVector::from_flat(3, &[0.4, -0.9, 0.1, 0.7, -0.3, 0.2]).unwrap();
        let v = fisher_info(&theta);
        let s = build_s(&v).unwrap();
        for (side, off, count) in [(Side::Event, 0, 3), (Side::Actor, 3, 3)] {
            for i in 0..count {
                for j in 0..count {
                    if i == j {
                        continue;
                    }
                    let (a, b) = (off + i, off + j);
                    let dense = s.entry(a, a) + s.entry(b, b) - 2.0 * s.entry(a, b);
                    let se = contrast_se(&v, side, i, j).unwrap();
                    assert!((se * se - dense).abs() <= 1e-13 * dense);
                }
            }
        }
    }

    #[test]
    fn interval_examples() {
        let ci = confidence_interval(0.0, 1.0, 0.95).unwrap();
        assert!((ci.low + 1.959964).abs() < 1e-6 && (ci.high - 1.959964).abs() < 1e-6);

        // published rows are rounded: the printed interval must be reachable
        // from some estimate and SE that round to the printed values
        let reachable = |est: f64, se: f64, digits: i32, low: f64, high: f64| {
            let h = 0.5 * 10f64.powi(-digits);
            let z = 1.959964;
            let lo_range = (est - h - z * (se + h) - h, est + h - z * (se - h) + h);
            let hi_range = (est - h + z * (se - h) - h, est + h + z * (se + h) + h);
            let ci = confidence_interval(est, se, 0.95).unwrap();
            (ci.low - low).abs() < 0.02
                && (ci.high - high).abs() < 0.02
                && lo_range.0 <= low
                && low <= lo_range.1
                && hi_range.0 <= high
                && high <= hi_range.1
        };
        assert!(reachable(-0.32, 0.08, 2, -0.49, -0.16));
        assert!(reachable(0.996, 0.311, 3, 0.387, 1.606));

        assert_eq!(
            confidence_interval(0.0, 1.0, 1.0),
            Err(Error::BadLevel(1.0))
        );
        assert!(confidence_interval(0.0, 0.0, 0.95).is_err());
    }

    #[test]
    fn general_level_quantile() {
        let z = normal_quantile_two_sided(0.8).unwrap();
        assert!((z - 1.281_551_565_544_600_4).abs() < 1e-8);
        let z = normal_quantile_two_sided(0.95).unwrap();
        let generic = Normal::standard().inverse_cdf(0.975);
        assert!((z - generic).abs() < 1e-12);
    }

    #[test]
    fn remark_sandwich() {
        // n q ≤ v_ii ≤ n/4 with q = e^{2‖θ‖}/(1+e^{2‖θ‖})²
        let (m, n) = (8usize, 13usize);
        let flat: Vec<f64> = (0..m + n - 1)
            .map(|k| ((k * 7 % 9) as f64 - 4.0) / 5.0)
            .collect();
        let theta = ParameterVector::from_flat(m, &flat).unwrap();
        let norm = theta.norm_inf();
        let v = fisher_info(&theta);
        for &vii in &v.event_diag {
            assert!(vii <= n as f64 / 4.0);
            let e = (2.0 * norm).exp();
            assert!(vii >= n as f64 * e / ((1.0 + e) * (1.0 + e)));
        }
        let r = infer(&theta, 0.95).unwrap();
        for &se in &r.se_alpha {
            assert!(se >= 2.0 / (n as f64).sqrt());
        }
    }
}
