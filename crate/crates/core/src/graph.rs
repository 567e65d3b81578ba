//! Affiliation networks, degree sequences and model parameters.
//!
//! Events index the rows of the affiliation matrix and actors its columns.
//! All numeric code works on 0-based indices; labels ride along as metadata.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// A binary `m × n` affiliation matrix, events as rows and actors as columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    m: usize,
    n: usize,
    x: Vec<u8>,
    event_labels: Option<Vec<String>>,
    actor_labels: Option<Vec<String>>,
}

impl BipartiteGraph {
    /// Builds a graph from a row-major 0/1 buffer of length `m * n`.
    pub fn from_dense(m: usize, n: usize, x: Vec<u8>) -> Result<Self> {
        if x.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                got: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|&v| v > 1) {
            return Err(Error::InvalidGraph(format!(
                "entry ({}, {}) is {}, expected 0 or 1",
                pos / n.max(1),
                pos % n.max(1),
                x[pos]
            )));
        }
        Ok(Self {
            m,
            n,
            x,
            event_labels: None,
            actor_labels: None,
        })
    }

    /// Builds a graph from nested rows. Every row must have the same length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut x = Vec::with_capacity(m * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            x.extend_from_slice(row);
        }
        Self::from_dense(m, n, x)
    }

    /// The empty graph on `m` events and `n` actors.
    pub fn empty(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            x: vec![0; m * n],
            event_labels: None,
            actor_labels: None,
        }
    }

    pub fn with_labels(
        mut self,
        event_labels: Option<Vec<String>>,
        actor_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(labels) = &event_labels {
            check_labels(labels, self.m, "event")?;
        }
        if let Some(labels) = &actor_labels {
            check_labels(labels, self.n, "actor")?;
        }
        self.event_labels = event_labels;
        self.actor_labels = actor_labels;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.x[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.x[i * self.n..(i + 1) * self.n]
    }

    /// Row-major view of the affiliation matrix.
    pub fn as_slice(&self) -> &[u8] {
        &self.x
    }

    pub fn edge_count(&self) -> usize {
        self.x.iter().map(|&v| v as usize).sum()
    }

    pub fn event_labels(&self) -> Option<&[String]> {
        self.event_labels.as_deref()
    }

    pub fn actor_labels(&self) -> Option<&[String]> {
        self.actor_labels.as_deref()
    }

    /// Label of event `i`, falling back to its 1-based position.
    pub fn event_label(&self, i: usize) -> String {
        self.event_labels
            .as_ref()
            .map_or_else(|| format!("{}", i + 1), |l| l[i].clone())
    }

    /// Label of actor `j`, falling back to its 1-based position.
    pub fn actor_label(&self, j: usize) -> String {
        self.actor_labels
            .as_ref()
            .map_or_else(|| format!("{}", j + 1), |l| l[j].clone())
    }

    /// Keeps the listed rows and columns, in the given order.
    pub fn submatrix(&self, events: &[usize], actors: &[usize]) -> Self {
        let mut x = Vec::with_capacity(events.len() * actors.len());
        for &i in events {
            let row = self.row(i);
            x.extend(actors.iter().map(|&j| row[j]));
        }
        Self {
            m: events.len(),
            n: actors.len(),
            x,
            event_labels: self
                .event_labels
                .as_ref()
                .map(|l| events.iter().map(|&i| l[i].clone()).collect()),
            actor_labels: self
                .actor_labels
                .as_ref()
                .map(|l| actors.iter().map(|&j| l[j].clone()).collect()),
        }
    }
}

fn check_labels(labels: &[String], expected: usize, side: &str) -> Result<()> {
    if labels.len() != expected {
        return Err(Error::InvalidGraph(format!(
            "{} {side} labels for {expected} {side}s",
            labels.len()
        )));
    }
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::InvalidGraph(format!(
                "duplicate {side} label {label:?}"
            )));
        }
    }
    Ok(())
}

/// Event degrees `d` (row sums) and actor degrees `b` (column sums).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    pub d: Vec<usize>,
    pub b: Vec<usize>,
}

impl DegreeSequence {
    pub fn m(&self) -> usize {
        self.d.len()
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn edge_count(&self) -> usize {
        self.d.iter().sum()
    }

    /// The sufficient statistic `(d_1..d_m, b_1..b_{n-1})`; `b_n` is implied.
    pub fn statistic(&self) -> Vec<f64> {
        let n = self.b.len();
        self.d
            .iter()
            .chain(&self.b[..n.saturating_sub(1)])
            .map(|&v| v as f64)
            .collect()
    }
}

pub fn degrees(g: &BipartiteGraph) -> DegreeSequence {
    let mut d = vec![0usize; g.m];
    let mut b = vec![0usize; g.n];
    for (i, di) in d.iter_mut().enumerate() {
        for (j, &v) in g.row(i).iter().enumerate() {
            let v = v as usize;
            *di += v;
            b[j] += v;
        }
    }
    DegreeSequence { d, b }
}

/// Result of [`prune_zero_degree`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub graph: BipartiteGraph,
    /// Original 0-based indices of the removed events, ascending.
    pub removed_events: Vec<usize>,
    /// Original 0-based indices of the removed actors, ascending.
    pub removed_actors: Vec<usize>,
    /// Original index of every retained event, in output order.
    pub kept_events: Vec<usize>,
    /// Original index of every retained actor, in output order.
    pub kept_actors: Vec<usize>,
}

/// Removes zero-degree events and actors, repeating until none remain.
pub fn prune_zero_degree(g: &BipartiteGraph) -> Result<Pruned> {
    let mut keep_event = vec![true; g.m];
    let mut keep_actor = vec![true; g.n];
    loop {
        let mut changed = false;
        let mut col = vec![0usize; g.n];
        for (i, keep) in keep_event.iter_mut().enumerate() {
            if !*keep {
                continue;
            }
            let row = g.row(i);
            let mut deg = 0;
            for j in (0..g.n).filter(|&j| keep_actor[j]) {
                deg += row[j] as usize;
                col[j] += row[j] as usize;
            }
            if deg == 0 {
                *keep = false;
                changed = true;
            }
        }
        for j in 0..g.n {
            if keep_actor[j] && col[j] == 0 {
                keep_actor[j] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let split =
        |keep: &[bool]| -> (Vec<usize>, Vec<usize>) { (0..keep.len()).partition(|&k| keep[k]) };
    let (kept_events, removed_events) = split(&keep_event);
    let (kept_actors, removed_actors) = split(&keep_actor);
    if kept_events.is_empty() || kept_actors.is_empty() {
        return Err(Error::AllPruned);
    }
    Ok(Pruned {
        graph: g.submatrix(&kept_events, &kept_actors),
        removed_events,
        removed_actors,
        kept_events,
        kept_actors,
    })
}

/// Model parameters `(α_1..α_m, β_1..β_{n-1})`; `β_n = 0` is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl ParameterVector {
    /// `beta` holds the `n - 1` free actor parameters.
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidParameters("no event parameters".into()));
        }
        if alpha.iter().chain(&beta).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameters("non-finite entry".into()));
        }
        Ok(Self { alpha, beta })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            alpha: vec![0.0; m],
            beta: vec![0.0; n.saturating_sub(1)],
        }
    }

    /// Splits a flat `m + n - 1` vector into event and actor parts.
    pub fn from_flat(m: usize, theta: &[f64]) -> Result<Self> {
        if theta.len() < m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: theta.len(),
            });
        }
        Self::new(theta[..m].to_vec(), theta[m..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    /// Number of actors, counting the reference actor.
    pub fn n(&self) -> usize {
        self.beta.len() + 1
    }

    pub fn dim(&self) -> usize {
        self.alpha.len() + self.beta.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// The free actor parameters `β_1..β_{n-1}`.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Actor parameter `j` (0-based), with the reference actor pinned at 0.
    #[inline]
    pub fn beta_full(&self, j: usize) -> f64 {
        if j < self.beta.len() {
            self.beta[j]
        } else {
            0.0
        }
    }

    pub fn norm_inf(&self) -> f64 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub(crate) fn check_dims(&self, m: usize, n: usize) -> Result<()> {
        if self.m() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: self.m(),
            });
        }
        if self.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.n(),
            });
        }
        Ok(())
    }
}
