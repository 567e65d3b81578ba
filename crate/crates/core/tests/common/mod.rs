//! Independent reference implementations. Nothing here calls into the
//! estimator; only plain `Vec<f64>` arithmetic.
#![allow(dead_code)]

use bipbeta::{BipartiteGraph, ParameterVector};
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `β` padded with the reference actor's zero.
pub fn full_beta(theta: &ParameterVector) -> Vec<f64> {
    let mut b = theta.beta().to_vec();
    b.push(0.0);
    b
}

/// `Σ x_ij (α_i+β_j) − Σ log(1+e^{α_i+β_j})`, written out directly.
pub fn loglik(g: &BipartiteGraph, alpha: &[f64], beta: &[f64]) -> f64 {
    let mut ll = 0.0;
    for (i, a) in alpha.iter().enumerate() {
        for (j, b) in beta.iter().enumerate() {
            let z = a + b;
            let log1p = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            ll += f64::from(g.get(i, j)) * z - log1p;
        }
    }
    ll
}

pub fn loglik_flat(g: &BipartiteGraph, flat: &[f64]) -> f64 {
    let m = g.m();
    let mut beta = flat[m..].to_vec();
    beta.push(0.0);
    loglik(g, &flat[..m], &beta)
}

/// Solves `Σ_k σ(t + c_k) = target` for `t` by safeguarded Newton.
fn solve_coordinate(offsets: &[f64], target: f64, start: f64) -> f64 {
    let (mut lo, mut hi) = (-60.0, 60.0);
    let mut t = start.clamp(lo, hi);
    for _ in 0..200 {
        let (mut f, mut df) = (-target, 0.0);
        for c in offsets {
            let p = sigmoid(t + c);
            f += p;
            df += p * (1.0 - p);
        }
        if f > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = t - f / df;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() < 1e-15 * (1.0 + t.abs()) {
            return next;
        }
        t = next;
    }
    t
}

/// Block-coordinate ascent on `ℓ`: each `α_i` and each free `β_j` is set to
/// its exact one-dimensional maximizer in turn. Returns the flat estimate
/// `(α, β_1..β_{n−1})`, or `None` when it fails to settle.
pub fn coordinate_ascent(g: &BipartiteGraph) -> Option<Vec<f64>> {
    let (m, n) = (g.m(), g.n());
    let d: Vec<f64> = (0..m)
        .map(|i| (0..n).map(|j| f64::from(g.get(i, j))).sum())
        .collect();
    let b: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| f64::from(g.get(i, j))).sum())
        .collect();
    let mut alpha = vec![0.0; m];
    let mut beta = vec![0.0; n];
    for _ in 0..200_000 {
        let mut change = 0.0f64;
        for i in 0..m {
            let next = solve_coordinate(&beta, d[i], alpha[i]);
            change = change.max((next - alpha[i]).abs());
            alpha[i] = next;
        }
        for j in 0..n - 1 {
            let next = solve_coordinate(&alpha, b[j], beta[j]);
            change = change.max((next - beta[j]).abs());
            beta[j] = next;
        }
        if alpha.iter().chain(&beta).any(|v| v.abs() > 40.0) {
            return None;
        }
        if change < 1e-13 {
            // the stationarity of ℓ, checked independently of the updates
            let grad = gradient_fd(g, &flat(&alpha, &beta), 1e-5);
            if grad.iter().all(|x| x.abs() < 1e-6) {
                return Some(flat(&alpha, &beta));
            }
            return None;
        }
    }
    None
}

fn flat(alpha: &[f64], beta_full: &[f64]) -> Vec<f64> {
    alpha
        .iter()
        .chain(&beta_full[..beta_full.len() - 1])
        .copied()
        .collect()
}

/// Central finite-difference gradient of `ℓ` at the flat parameter.
pub fn gradient_fd(g: &BipartiteGraph, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|k| {
            let (mut up, mut dn) = (x.to_vec(), x.to_vec());
            up[k] += h;
            dn[k] -= h;
            (loglik_flat(g, &up) - loglik_flat(g, &dn)) / (2.0 * h)
        })
        .collect()
}

/// Dense `S` entry by entry from a dense Fisher matrix and its augmented total.
pub fn dense_s(v: &[Vec<f64>], m: usize, aug_total: f64) -> Vec<Vec<f64>> {
    let dim = v.len();
    (0..dim)
        .map(|r| {
            (0..dim)
                .map(|c| {
                    let same = (r < m) == (c < m);
                    let diag = if r == c { 1.0 / v[r][r] } else { 0.0 };
                    diag + if same { 1.0 } else { -1.0 } / aug_total
                })
                .collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> Pcg64 {
    Pcg64::seed_from_u64(seed)
}

pub fn random_theta(rng: &mut Pcg64, m: usize, n: usize, spread: f64) -> ParameterVector {
    let mut draw = |k: usize| {
        (0..k)
            .map(|_| spread * (2.0 * rng.random::<f64>() - 1.0))
            .collect()
    };
    ParameterVector::new(draw(m), draw(n - 1)).unwrap()
}

pub fn random_graph(rng: &mut Pcg64, m: usize, n: usize, density: f64) -> BipartiteGraph {
    let x = (0..m * n)
        .map(|_| u8::from(rng.random::<f64>() < density))
        .collect();
    BipartiteGraph::from_dense(m, n, x).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
