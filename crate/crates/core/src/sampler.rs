//! Sampling affiliation networks from the model, and the linear-ramp
//! parameter scenarios used by the simulation studies.

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, ParameterVector};
use crate::likelihood::edge_probability;

/// How the ramp height `L` is resolved against a side's size `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LKind {
    Zero,
    /// `log(log k)`
    LogLog,
    /// `(log k)^{1/2}`
    SqrtLog,
    /// `log k`
    Log,
    /// A fixed height, identical on both sides.
    Value(f64),
}

impl LKind {
    pub fn resolve(self, k: usize) -> f64 {
        let lk = (k as f64).ln();
        match self {
            LKind::Zero => 0.0,
            LKind::LogLog => lk.ln(),
            LKind::SqrtLog => lk.sqrt(),
            LKind::Log => lk,
            LKind::Value(v) => v,
        }
    }
}

impl std::str::FromStr for LKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "zero" => Ok(LKind::Zero),
            "loglog" => Ok(LKind::LogLog),
            "sqrtlog" => Ok(LKind::SqrtLog),
            "log" => Ok(LKind::Log),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(LKind::Value)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown L {other:?}"))),
        }
    }
}

impl std::fmt::Display for LKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LKind::Zero => f.write_str("0"),
            LKind::LogLog => f.write_str("loglog"),
            LKind::SqrtLog => f.write_str("sqrtlog"),
            LKind::Log => f.write_str("log"),
            LKind::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub m: usize,
    pub n: usize,
    pub l_kind: LKind,
    /// Ramp height for events, resolved with `m`.
    pub l_alpha: f64,
    /// Ramp height for actors, resolved with `n`.
    pub l_beta: f64,
    pub theta_star: ParameterVector,
}

/// Linear ramps `α*_{i+1} = (m−1−i) L_α/(m−1)` and
/// `β*_{j+1} = (n−1−j) L_β/(n−1)`, with `β*_n = 0`.
pub fn make_scenario(m: usize, n: usize, l_kind: LKind) -> Result<Scenario> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidConfig(format!(
            "scenarios need m >= 2 and n >= 2, got {m} x {n}"
        )));
    }
    let l_alpha = l_kind.resolve(m);
    let l_beta = l_kind.resolve(n);
    let ramp = |k: usize, len: usize, height: f64| (len - 1 - k) as f64 * height / (len - 1) as f64;
    let alpha = (0..m).map(|i| ramp(i, m, l_alpha)).collect();
    let beta = (0..n - 1).map(|j| ramp(j, n, l_beta)).collect();
    Ok(Scenario {
        m,
        n,
        l_kind,
        l_alpha,
        l_beta,
        theta_star: ParameterVector::new(alpha, beta)?,
    })
}

/// Draws every edge independently with its model probability.
///
/// Uses PCG64 seeded from `seed`; entries are drawn row-major, one uniform
/// per entry, so the result is identical on every platform.
pub fn sample_graph(theta: &ParameterVector, seed: u64) -> BipartiteGraph {
    let (m, n) = (theta.m(), theta.n());
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut x = Vec::with_capacity(m * n);
    for &a in theta.alpha() {
        for j in 0..n {
            let p = edge_probability(a, theta.beta_full(j));
            let u: f64 = rng.random();
            x.push(u8::from(u < p));
        }
    }
    BipartiteGraph::from_dense(m, n, x).expect("sampled matrix is binary with matching size")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::degrees;

    #[test]
    fn explicit_ramp() {
        let s = make_scenario(3, 4, LKind::Value(2.0)).unwrap();
        assert_eq!(s.theta_star.alpha(), &[2.0, 1.0, 0.0]);
        let b = s.theta_star.beta();
        assert_eq!(b.len(), 3);
        assert!((b[0] - 2.0).abs() < 1e-15 && (b[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_ramp() {
        let s = make_scenario(5, 7, LKind::Zero).unwrap();
        assert_eq!(s.theta_star.norm_inf(), 0.0);
    }

    #[test]
    fn log_ramp_endpoints() {
        let s = make_scenario(100, 200, LKind::Log).unwrap();
        assert!((s.theta_star.alpha()[0] - 100f64.ln()).abs() < 1e-12);
        assert!((s.theta_star.alpha()[0] - 4.605).abs() < 1e-3);
        assert_eq!(s.theta_star.alpha()[99], 0.0);
        assert!((s.theta_star.beta()[0] - 200f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn parses_l_kinds() {
        assert_eq!("log".parse::<LKind>().unwrap(), LKind::Log);
        assert_eq!("0".parse::<LKind>().unwrap(), LKind::Zero);
        assert_eq!("1.5".parse::<LKind>().unwrap(), LKind::Value(1.5));
        assert!("bogus".parse::<LKind>().is_err());
        assert!((LKind::LogLog.resolve(100) - 100f64.ln().ln()).abs() < 1e-15);
    }

    #[test]
    fn edge_count_at_zero() {
        let g = sample_graph(&ParameterVector::zeros(100, 100), 7);
        let e = g.edge_count() as i64;
        assert!((e - 5000).abs() <= 150, "edge count {e}");
    }

    #[test]
    fn saturated_row() {
        let mut alpha = vec![0.0; 5];
        alpha[0] = 10.0;
        let theta = ParameterVector::new(alpha, vec![0.0; 19]).unwrap();
        let g = sample_graph(&theta, 3);
        assert_eq!(degrees(&g).d[0], 20);
    }

    #[test]
    fn deterministic() {
        let theta = make_scenario(20, 30, LKind::SqrtLog).unwrap().theta_star;
        assert_eq!(sample_graph(&theta, 11), sample_graph(&theta, 11));
        assert_ne!(sample_graph(&theta, 11), sample_graph(&theta, 12));
    }
}
