use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bipbeta::experiments::{
    consistency_csv, run_consistency, run_coverage, run_qq, Pair, QQTarget,
};
use bipbeta::io::{
    parse_init, parse_input, parse_theta, write_dense, write_theta, FitFileConfig, FitReport,
    InputFormat, PruneInfo,
};
use bipbeta::{
    fisher_info, fit, infer, inverse_approx_error, make_scenario, prune_zero_degree, sample_graph,
    Error, FitConfig, LKind, Method, ParameterVector, Side,
};

const EXIT_USAGE: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "bipbeta",
    version,
    about = "Fit and simulate the degree-based bipartite random graph model"
)]
struct Cli {
    /// Worker threads for replications (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the MLE to an affiliation network and report estimates with CIs.
    Fit(FitArgs),
    /// Sample a network from a scenario or an explicit parameter file.
    Sample(SampleArgs),
    /// Monte-Carlo coverage of Wald intervals for parameter contrasts.
    Coverage(CoverageArgs),
    /// Export QQ data for standardized contrasts or single estimates.
    Qq(QqArgs),
    /// Compare the approximate inverse with the exact Fisher inverse.
    CheckApprox(CheckApproxArgs),
    /// Max-norm estimation error across growing network sizes.
    Consistency(ConsistencyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Exact,
    Approx,
    FixedPoint,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::NewtonExact,
            MethodArg::Approx => Method::NewtonApprox,
            MethodArg::FixedPoint => Method::FixedPoint,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    EdgeList,
    Dense,
}

impl From<FormatArg> for InputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::EdgeList => InputFormat::EdgeList,
            FormatArg::Dense => InputFormat::DenseMatrix,
        }
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Convergence tolerance on the max-norm of the score.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverArgs {
    fn config(&self) -> FitConfig {
        let mut cfg = FitConfig::default();
        if let Some(m) = self.method {
            cfg.method = m.into();
        }
        if let Some(t) = self.tol {
            cfg.tol_score = t;
        }
        if let Some(k) = self.max_iter {
            cfg.max_iter = k;
        }
        cfg
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Remove zero-degree events and actors before fitting (default).
    #[arg(long, overrides_with = "no_prune")]
    prune: bool,
    #[arg(long, overrides_with = "prune")]
    no_prune: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Starting point: zeros or moment.
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    level: Option<f64>,
    /// TOML file with fit settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Ramp height: 0, loglog, sqrtlog, log or a number.
    #[arg(long = "L", default_value = "0")]
    l: String,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "L", default_value = "0")]
    l: String,
    /// Parameter file (side,index,value) instead of a scenario.
    #[arg(long, conflicts_with_all = ["m", "n"])]
    theta: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output graph (dense CSV); the true parameters go to `<out>.theta.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Contrasts such as a1-2 or beta(100,101); repeat or separate with ';'.
    #[arg(long, value_delimiter = ';')]
    pairs: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QqArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Standardized contrasts (xi for events, eta for actors), e.g. a1-2.
    #[arg(long, value_delimiter = ';')]
    pairs: Vec<String>,
    /// Single standardized estimates, e.g. a1 or b5.
    #[arg(long, value_delimiter = ';')]
    single: Vec<String>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output CSV; with several targets, one file per target named `<stem>_<target>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckApproxArgs {
    /// Sizes as N (square) or MxN, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "10,20,40,80")]
    sizes: Vec<String>,
    /// Parameter ramp evaluated at each size.
    #[arg(long = "L", default_value = "0")]
    l: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConsistencyArgs {
    #[arg(long, value_delimiter = ',', default_value = "50,100,200")]
    sizes: Vec<String>,
    #[arg(long = "L", default_value = "0")]
    l: String,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes, mapped onto distinct exit codes.
enum Failure {
    Usage(String),
    Input(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::NonBinaryEntry { .. }
            | Error::EmptyInput
            | Error::Io(_) => Failure::Input(e),
            Error::InvalidConfig(msg) => Failure::Usage(msg),
            other => Failure::Runtime(other),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Input(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_l(s: &str) -> std::result::Result<LKind, Failure> {
    s.parse::<LKind>().map_err(Failure::from)
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), Failure> {
    let bad = || Failure::Usage(format!("bad size {s:?}, expected N or MxN"));
    match s.trim().split_once('x') {
        Some((m, n)) => Ok((m.parse().map_err(|_| bad())?, n.parse().map_err(|_| bad())?)),
        None => {
            let k = s.trim().parse().map_err(|_| bad())?;
            Ok((k, k))
        }
    }
}

fn parse_pairs(raw: &[String]) -> std::result::Result<Vec<Pair>, Failure> {
    raw.iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Pair>().map_err(Failure::from))
        .collect()
}

fn cmd_fit(args: &FitArgs) -> CmdResult {
    let file_cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(e.into()))?;
            FitFileConfig::parse(&text)?
        }
        None => FitFileConfig::default(),
    };
    let format = args
        .format
        .map(InputFormat::from)
        .or(file_cfg.format)
        .unwrap_or(InputFormat::EdgeList);
    let parsed = parse_input(&args.input, format)?;
    if parsed.duplicate_edges > 0 {
        eprintln!(
            "warning: collapsed {} duplicate edges",
            parsed.duplicate_edges
        );
    }
    let raw = parsed.graph;

    let mut cfg = FitConfig::default();
    if let Some(m) = file_cfg.method {
        cfg.method = m;
    }
    if let Some(t) = file_cfg.tol {
        cfg.tol_score = t;
    }
    if let Some(t) = file_cfg.tol_step {
        cfg.tol_step = t;
    }
    if let Some(k) = file_cfg.max_iter {
        cfg.max_iter = k;
    }
    if let Some(d) = file_cfg.divergence_threshold {
        cfg.divergence_threshold = d;
    }
    if let Some(init) = args.init.as_deref().or(file_cfg.init.as_deref()) {
        cfg.init = parse_init(init)?;
    }
    let flags = args.solver.config();
    if args.solver.method.is_some() {
        cfg.method = flags.method;
    }
    if args.solver.tol.is_some() {
        cfg.tol_score = flags.tol_score;
    }
    if args.solver.max_iter.is_some() {
        cfg.max_iter = flags.max_iter;
    }
    let level = args.level.or(file_cfg.level).unwrap_or(0.95);
    let prune = if args.no_prune {
        false
    } else if args.prune {
        true
    } else {
        file_cfg.prune.unwrap_or(true)
    };

    let pruned = if prune {
        Some(prune_zero_degree(&raw)?)
    } else {
        None
    };
    let g = pruned.as_ref().map_or(&raw, |p| &p.graph);
    if let Some(p) = &pruned {
        eprintln!(
            "pruned {} zero-degree events and {} zero-degree actors ({} x {} -> {} x {})",
            p.removed_events.len(),
            p.removed_actors.len(),
            raw.m(),
            raw.n(),
            g.m(),
            g.n()
        );
    }
    if g.m() > g.n() {
        eprintln!("warning: more events ({}) than actors ({})", g.m(), g.n());
    }
    let result = fit(g, &cfg)?;
    let inference = if result.converged {
        Some(infer(&result.theta_hat, level)?)
    } else {
        None
    };
    let prune_info = match &pruned {
        Some(p) => PruneInfo::Applied {
            original: &raw,
            pruned: p,
        },
        None => PruneInfo::Disabled,
    };
    let report = FitReport::new(g, prune_info, &cfg, level, &result, inference.as_ref());
    emit(args.out.as_deref(), &report.render())
}

fn cmd_sample(args: &SampleArgs) -> CmdResult {
    let theta = match (&args.theta, args.m, args.n) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(e.into()))?;
            parse_theta(&text)?
        }
        (None, Some(m), Some(n)) => make_scenario(m, n, parse_l(&args.l)?)?.theta_star,
        _ => {
            return Err(Failure::Usage(
                "give either --theta or both --m and --n".into(),
            ))
        }
    };
    let g = sample_graph(&theta, args.seed);
    emit(Some(&args.out), &write_dense(&g))?;
    let mut sidecar = args.out.clone().into_os_string();
    sidecar.push(".theta.csv");
    emit(Some(Path::new(&sidecar)), &write_theta(&theta))
}

fn cmd_coverage(args: &CoverageArgs) -> CmdResult {
    let sc = &args.scenario;
    let scenario = make_scenario(sc.m, sc.n, parse_l(&sc.l)?)?;
    let mut pairs = parse_pairs(&args.pairs)?;
    if pairs.is_empty() {
        let (m, n) = (sc.m, sc.n);
        pairs = vec![
            Pair::event(1, 2),
            Pair::event(m / 2, m / 2 + 1),
            Pair::event(m - 1, m),
            Pair::actor(1, 2),
            Pair::actor(n / 2, n / 2 + 1),
            Pair::actor(n - 2, n - 1),
        ];
    }
    let report = run_coverage(
        &scenario,
        &pairs,
        args.reps,
        args.seed,
        args.level,
        &args.solver.config(),
    )?;
    eprintln!(
        "{} replications, MLE did not exist in {:.2}%",
        report.total_replications, report.nonexistence_pct
    );
    emit(args.out.as_deref(), &report.to_csv())
}

fn parse_single(s: &str) -> std::result::Result<QQTarget, Failure> {
    let bad = || Failure::Usage(format!("bad single target {s:?}, expected a<k> or b<k>"));
    let s = s.trim();
    let (side, rest) = if let Some(r) = s.strip_prefix("alpha").or_else(|| s.strip_prefix('a')) {
        (Side::Event, r)
    } else if let Some(r) = s.strip_prefix("beta").or_else(|| s.strip_prefix('b')) {
        (Side::Actor, r)
    } else {
        return Err(bad());
    };
    let k = rest
        .trim_matches(|c| c == '(' || c == ')')
        .parse()
        .map_err(|_| bad())?;
    Ok(QQTarget::Single(side, k))
}

fn cmd_qq(args: &QqArgs) -> CmdResult {
    let sc = &args.scenario;
    let scenario = make_scenario(sc.m, sc.n, parse_l(&sc.l)?)?;
    let mut targets: Vec<QQTarget> = parse_pairs(&args.pairs)?
        .into_iter()
        .map(QQTarget::from)
        .collect();
    for s in args.single.iter().filter(|s| !s.trim().is_empty()) {
        targets.push(parse_single(s)?);
    }
    if targets.is_empty() {
        targets.push(QQTarget::Xi(1, 2));
    }
    let exports = run_qq(
        &scenario,
        &targets,
        args.reps,
        args.seed,
        &args.solver.config(),
    )?;
    for e in &exports {
        eprintln!(
            "{}: {} standardized values, KS distance {:.4}",
            e.target,
            e.empirical.len(),
            e.ks_statistic()
        );
    }
    match (&args.out, exports.as_slice()) {
        (out, [single]) => emit(out.as_deref(), &single.to_csv()),
        (Some(out), many) => {
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("qq");
            for e in many {
                let path = out.with_file_name(format!("{stem}_{}.csv", e.target));
                emit(Some(&path), &e.to_csv())?;
            }
            Ok(())
        }
        (None, many) => {
            for e in many {
                println!("# {}", e.target);
                print!("{}", e.to_csv());
            }
            Ok(())
        }
    }
}

fn cmd_check_approx(args: &CheckApproxArgs) -> CmdResult {
    let l = parse_l(&args.l)?;
    let mut out = String::from("m,n,max_abs_err,scaled_err_mn,bound_ratio,q,Q\n");
    for size in &args.sizes {
        let (m, n) = parse_size(size)?;
        let theta: ParameterVector = make_scenario(m, n, l)?.theta_star;
        let err = inverse_approx_error(&fisher_info(&theta))?;
        out.push_str(&format!(
            "{m},{n},{:.10e},{:.6},{:.6},{:.6},{:.6}\n",
            err.max_abs_err,
            err.max_abs_err * (m * n) as f64,
            err.bound_ratio,
            err.q,
            err.big_q
        ));
    }
    emit(args.out.as_deref(), &out)
}

fn cmd_consistency(args: &ConsistencyArgs) -> CmdResult {
    let l = parse_l(&args.l)?;
    let scenarios = args
        .sizes
        .iter()
        .map(|s| {
            let (m, n) = parse_size(s)?;
            make_scenario(m, n, l).map_err(Failure::from)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = run_consistency(&scenarios, args.reps, args.seed, &args.solver.config())?;
    emit(args.out.as_deref(), &consistency_csv(&rows))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Coverage(a) => cmd_coverage(a),
        Command::Qq(a) => cmd_qq(a),
        Command::CheckApprox(a) => cmd_check_approx(a),
        Command::Consistency(a) => cmd_consistency(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
