//! File formats: dense 0/1 CSV, edge lists, parameter sidecars, the fit
//! report, and the optional TOML config for `fit`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{degrees, BipartiteGraph, ParameterVector, Pruned};
use crate::inference::InferenceResult;
use crate::solver::{Existence, FitConfig, FitResult, Init, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// `(event, actor)` pairs, tab- or comma-separated.
    #[serde(alias = "edge-list")]
    EdgeList,
    /// Comma-separated 0/1 rows, one row per event.
    #[serde(alias = "dense")]
    DenseMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedInput {
    pub graph: BipartiteGraph,
    /// Repeated `(event, actor)` pairs that were collapsed to one edge.
    pub duplicate_edges: usize,
}

pub fn parse_input(path: &Path, format: InputFormat) -> Result<ParsedInput> {
    let text = std::fs::read_to_string(path)?;
    match format {
        InputFormat::DenseMatrix => Ok(ParsedInput {
            graph: parse_dense(&text)?,
            duplicate_edges: 0,
        }),
        InputFormat::EdgeList => parse_edge_list(&text),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_dense(text: &str) -> Result<BipartiteGraph> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    for (line, content) in data_lines(text) {
        let row = content
            .split(',')
            .map(|cell| match cell.trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::NonBinaryEntry {
                    line,
                    value: other.to_string(),
                }),
            })
            .collect::<Result<Vec<u8>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    BipartiteGraph::from_rows(&rows)
}

fn is_header(fields: (&str, &str)) -> bool {
    let known = ["event", "actor", "events", "actors", "source", "target"];
    let lower = (fields.0.to_ascii_lowercase(), fields.1.to_ascii_lowercase());
    known.contains(&lower.0.as_str()) && known.contains(&lower.1.as_str())
}

/// Edge list; events and actors get indices in order of first appearance.
/// A first line naming the columns (e.g. `event<TAB>actor`) is skipped.
pub fn parse_edge_list(text: &str) -> Result<ParsedInput> {
    let mut events: Vec<String> = Vec::new();
    let mut actors: Vec<String> = Vec::new();
    let mut event_ix: HashMap<String, usize> = HashMap::new();
    let mut actor_ix: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (k, (line, content)) in data_lines(text).enumerate() {
        let sep = if content.contains('\t') { '\t' } else { ',' };
        let fields: Vec<&str> = content.split(sep).map(str::trim).collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Parse {
                line,
                msg: format!("expected two fields separated by tab or comma, got {content:?}"),
            });
        }
        if k == 0 && is_header((fields[0], fields[1])) {
            continue;
        }
        let intern = |name: &str, names: &mut Vec<String>, ix: &mut HashMap<String, usize>| {
            *ix.entry(name.to_string()).or_insert_with(|| {
                names.push(name.to_string());
                names.len() - 1
            })
        };
        let e = intern(fields[0], &mut events, &mut event_ix);
        let a = intern(fields[1], &mut actors, &mut actor_ix);
        edges.push((e, a));
    }
    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (m, n) = (events.len(), actors.len());
    let mut x = vec![0u8; m * n];
    let mut duplicate_edges = 0;
    for (e, a) in edges {
        let cell = &mut x[e * n + a];
        duplicate_edges += usize::from(*cell == 1);
        *cell = 1;
    }
    let graph = BipartiteGraph::from_dense(m, n, x)?.with_labels(Some(events), Some(actors))?;
    Ok(ParsedInput {
        graph,
        duplicate_edges,
    })
}

pub fn write_dense(g: &BipartiteGraph) -> String {
    let mut out = String::with_capacity(g.m() * g.n() * 2);
    for i in 0..g.m() {
        for (j, v) in g.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push(if *v == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

/// `side,index,value` rows with 1-based indices; the reference actor is
/// written explicitly with value 0.
pub fn write_theta(theta: &ParameterVector) -> String {
    let mut out = String::from("side,index,value\n");
    for (i, a) in theta.alpha().iter().enumerate() {
        let _ = writeln!(out, "alpha,{},{a:?}", i + 1);
    }
    for j in 0..theta.n() {
        let _ = writeln!(out, "beta,{},{:?}", j + 1, theta.beta_full(j));
    }
    out
}

/// Reads the format produced by [`write_theta`]. The reference actor row
/// may be omitted; if present it must be 0.
pub fn parse_theta(text: &str) -> Result<ParameterVector> {
    let mut alpha: Vec<(usize, f64)> = Vec::new();
    let mut beta: Vec<(usize, f64)> = Vec::new();
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: "expected side,index,value".into(),
            });
        }
        if fields[0] == "side" {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let index: usize = fields[1].parse().map_err(|_| bad("bad index"))?;
        let value: f64 = fields[2].parse().map_err(|_| bad("bad value"))?;
        match fields[0] {
            "alpha" => alpha.push((index, value)),
            "beta" => beta.push((index, value)),
            _ => return Err(bad("side must be alpha or beta")),
        }
    }
    let dense = |mut v: Vec<(usize, f64)>, side: &str| -> Result<Vec<f64>> {
        v.sort_by_key(|&(k, _)| k);
        for (pos, &(k, _)) in v.iter().enumerate() {
            if k != pos + 1 {
                return Err(Error::InvalidParameters(format!(
                    "{side} indices must run 1..{} without gaps",
                    v.len()
                )));
            }
        }
        Ok(v.into_iter().map(|(_, x)| x).collect())
    };
    let alpha = dense(alpha, "alpha")?;
    let mut beta = dense(beta, "beta")?;
    if alpha.is_empty() {
        return Err(Error::EmptyInput);
    }
    // an explicit trailing 0 is the reference actor
    if beta.last() == Some(&0.0) {
        beta.pop();
    }
    ParameterVector::new(alpha, beta)
}

/// Settings for `fit` that may come from a TOML file; flags override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitFileConfig {
    pub method: Option<Method>,
    pub tol: Option<f64>,
    pub tol_step: Option<f64>,
    pub max_iter: Option<usize>,
    pub divergence_threshold: Option<f64>,
    pub init: Option<String>,
    pub prune: Option<bool>,
    pub level: Option<f64>,
    pub format: Option<InputFormat>,
}

impl FitFileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
            msg: e.message().to_string(),
        })
    }
}

pub fn parse_init(s: &str) -> Result<Init> {
    match s {
        "zeros" => Ok(Init::Zeros),
        "moment" => Ok(Init::Moment),
        other => Err(Error::InvalidConfig(format!(
            "init must be zeros or moment, got {other:?}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ReportRow {
    label: String,
    degree: usize,
    estimate: Option<f64>,
    se: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct PruneSummary {
    enabled: bool,
    original_m: usize,
    original_n: usize,
    removed_events: usize,
    removed_actors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ConfigEcho {
    method: Method,
    tol_score: f64,
    tol_step: f64,
    max_iter: usize,
    divergence_threshold: f64,
    init: String,
    level: f64,
}

/// Everything the `fit` command writes out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    m: usize,
    n: usize,
    edges: usize,
    pruning: PruneSummary,
    config: ConfigEcho,
    existence: Existence,
    /// Labels of the nodes whose degree is 0 or maximal.
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary: Option<BoundaryLabels>,
    converged: bool,
    iterations: usize,
    final_score_norm: f64,
    log_likelihood: f64,
    score_trace: Vec<f64>,
    events: Vec<ReportRow>,
    actors: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BoundaryLabels {
    events: Vec<String>,
    actors: Vec<String>,
}

/// How the fitted graph relates to the raw input.
pub enum PruneInfo<'a> {
    Disabled,
    Applied {
        original: &'a BipartiteGraph,
        pruned: &'a Pruned,
    },
}

impl FitReport {
    pub fn new(
        g: &BipartiteGraph,
        prune: PruneInfo<'_>,
        cfg: &FitConfig,
        level: f64,
        result: &FitResult,
        inference: Option<&InferenceResult>,
    ) -> Self {
        let ds = degrees(g);
        let exists = result.existence == Existence::Exists;
        let m = g.m();
        let row = |label: String,
                   degree: usize,
                   est: Option<f64>,
                   se: Option<f64>,
                   ci: Option<crate::inference::Interval>| ReportRow {
            label,
            degree,
            estimate: est,
            se,
            ci_low: ci.map(|c| c.low),
            ci_high: ci.map(|c| c.high),
            reference: false,
        };
        let mut events: Vec<ReportRow> = (0..m)
            .map(|i| {
                let inf = inference.filter(|_| exists);
                row(
                    g.event_label(i),
                    ds.d[i],
                    exists.then(|| result.theta_hat.alpha()[i]),
                    inf.map(|r| r.se_alpha[i]),
                    inf.map(|r| r.ci_alpha[i]),
                )
            })
            .collect();
        let mut actors: Vec<ReportRow> = (0..g.n())
            .map(|j| {
                if j == g.n() - 1 {
                    return ReportRow {
                        estimate: exists.then_some(0.0),
                        reference: true,
                        ..row(g.actor_label(j), ds.b[j], None, None, None)
                    };
                }
                let inf = inference.filter(|_| exists);
                row(
                    g.actor_label(j),
                    ds.b[j],
                    exists.then(|| result.theta_hat.beta()[j]),
                    inf.map(|r| r.se_beta[j]),
                    inf.map(|r| r.ci_beta[j]),
                )
            })
            .collect();
        // stable sort keeps input order among equal degrees
        events.sort_by_key(|r| std::cmp::Reverse(r.degree));
        actors.sort_by_key(|r| std::cmp::Reverse(r.degree));

        let pruning = match prune {
            PruneInfo::Disabled => PruneSummary {
                enabled: false,
                original_m: g.m(),
                original_n: g.n(),
                removed_events: 0,
                removed_actors: 0,
            },
            PruneInfo::Applied { original, pruned } => PruneSummary {
                enabled: true,
                original_m: original.m(),
                original_n: original.n(),
                removed_events: pruned.removed_events.len(),
                removed_actors: pruned.removed_actors.len(),
            },
        };
        let init = match &cfg.init {
            Init::Zeros => "zeros".to_string(),
            Init::Moment => "moment".to_string(),
            Init::User(_) => "user".to_string(),
        };
        Self {
            m,
            n: g.n(),
            edges: ds.edge_count(),
            pruning,
            config: ConfigEcho {
                method: cfg.method,
                tol_score: cfg.tol_score,
                tol_step: cfg.tol_step,
                max_iter: cfg.max_iter,
                divergence_threshold: cfg.divergence_threshold,
                init,
                level,
            },
            existence: result.existence.clone(),
            boundary: match &result.existence {
                Existence::BoundaryDegree { events, actors } => Some(BoundaryLabels {
                    events: events.iter().map(|&i| g.event_label(i)).collect(),
                    actors: actors.iter().map(|&j| g.actor_label(j)).collect(),
                }),
                _ => None,
            },
            converged: result.converged,
            iterations: result.iterations,
            final_score_norm: result.final_score_norm,
            log_likelihood: result.log_likelihood,
            score_trace: result.score_trace.clone(),
            events,
            actors,
        }
    }

    /// Human-readable tables followed by a JSON section at full precision.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# bipbeta fit report");
        let _ = writeln!(
            out,
            "events: {}  actors: {}  edges: {}",
            self.m, self.n, self.edges
        );
        let p = &self.pruning;
        if p.enabled {
            let _ = writeln!(
                out,
                "pruning: {} x {} input, removed {} zero-degree events and {} zero-degree actors",
                p.original_m, p.original_n, p.removed_events, p.removed_actors
            );
        } else {
            let _ = writeln!(out, "pruning: disabled");
        }
        let method = serde_json::to_value(self.config.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "method: {method}  tol: {:e}  max_iter: {}  init: {}",
            self.config.tol_score, self.config.max_iter, self.config.init
        );
        let existence = match &self.existence {
            Existence::Exists => "exists".to_string(),
            Existence::BoundaryDegree { events, actors } => {
                let mut text = format!(
                    "does not exist (boundary degrees: {} events, {} actors)",
                    events.len(),
                    actors.len()
                );
                if let Some(b) = &self.boundary {
                    let names: Vec<&str> = b
                        .events
                        .iter()
                        .chain(&b.actors)
                        .map(String::as_str)
                        .collect();
                    if names.len() <= 10 {
                        let _ = write!(text, " [{}]", names.join(", "));
                    }
                }
                text
            }
            Existence::Diverged => "does not exist (iterates diverged)".to_string(),
            Existence::MaxIter => "undetermined (iteration limit reached)".to_string(),
        };
        let _ = writeln!(
            out,
            "MLE: {existence}  iterations: {}  max|F|: {:.3e}",
            self.iterations, self.final_score_norm
        );
        if self.existence == Existence::Exists {
            let level = (self.config.level * 100.0).round();
            let _ = writeln!(out, "\n## events: estimate[{level}% CI](SE)");
            write_rows(&mut out, &self.events, 2);
            let _ = writeln!(out, "\n## actors: estimate[{level}% CI](SE)");
            write_rows(&mut out, &self.actors, 3);
        }
        let _ = writeln!(out, "\n## machine-readable");
        out.push_str(&serde_json::to_string_pretty(self).expect("report serializes"));
        out.push('\n');
        out
    }
}

fn write_rows(out: &mut String, rows: &[ReportRow], digits: usize) {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
    let _ = writeln!(out, "{:<width$}  degree  estimate", "label");
    for r in rows {
        let cell = match (r.estimate, r.se, r.ci_low, r.ci_high) {
            (Some(e), Some(se), Some(lo), Some(hi)) => {
                format!("{e:.digits$}[{lo:.digits$},{hi:.digits$}]({se:.digits$})")
            }
            (Some(e), _, _, _) if r.reference => format!("{e:.digits$} (reference)"),
            _ => "-".to_string(),
        };
        let _ = writeln!(out, "{:<width$}  {:>6}  {cell}", r.label, r.degree);
    }
}

/// Formats an estimate the way the result tables print it.
pub fn format_estimate(estimate: f64, ci: (f64, f64), se: f64, digits: usize) -> String {
    format!(
        "{estimate:.digits$}[{:.digits$},{:.digits$}]({se:.digits$})",
        ci.0, ci.1
    )
}
