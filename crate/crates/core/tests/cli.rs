use std::path::PathBuf;
use std::process::{Command, Output};

use bipbeta::io::parse_dense;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bipbeta"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bipbeta-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sample_then_fit_round_trip() {
    let out = scratch("round.csv");
    let path = out.to_str().unwrap();
    let o = run(&[
        "sample", "--m", "15", "--n", "30", "--seed", "4", "--out", path,
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let g = parse_dense(&text).unwrap();
    let theta = bipbeta::make_scenario(15, 30, bipbeta::LKind::Zero)
        .unwrap()
        .theta_star;
    assert_eq!(g, bipbeta::sample_graph(&theta, 4));
    let sidecar = std::fs::read_to_string(format!("{path}.theta.csv")).unwrap();
    assert_eq!(bipbeta::io::parse_theta(&sidecar).unwrap(), theta);

    let fit = run(&["fit", "--input", path, "--format", "dense"]);
    assert!(fit.status.success());
    let report = stdout(&fit);
    assert!(report.contains("MLE: exists"));
    assert!(report.contains("## events: estimate[95% CI](SE)"));
    assert!(report.contains("(reference)"));
    let stderr = String::from_utf8(fit.stderr).unwrap();
    assert!(stderr.contains("pruned 0 zero-degree events and 0 zero-degree actors"));

    // the JSON section parses and carries the same verdict
    let json = report.split("## machine-readable\n").nth(1).unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["converged"], true);
    assert_eq!(v["events"].as_array().unwrap().len(), 15);
}

#[test]
fn reports_are_byte_identical_across_runs_and_threads() {
    let out = scratch("det.csv");
    let path = out.to_str().unwrap();
    assert!(
        run(&["sample", "--m", "10", "--n", "25", "--L", "1", "--seed", "2", "--out", path])
            .status
            .success()
    );
    let a = run(&["fit", "--input", path, "--format", "dense"]);
    let b = run(&["fit", "--input", path, "--format", "dense"]);
    assert_eq!(a.stdout, b.stdout);

    let cov = |threads: &str| {
        run(&[
            "--threads",
            threads,
            "coverage",
            "--m",
            "10",
            "--n",
            "20",
            "--reps",
            "40",
            "--seed",
            "3",
            "--pairs",
            "a1-2;b1-2",
        ])
    };
    let (one, four) = (cov("1"), cov("4"));
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let csv = stdout(&one);
    assert!(csv.starts_with("m,n,L_kind"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn edge_list_input_collapses_duplicates() {
    let input = scratch("edges.tsv");
    // the last line repeats an edge
    let mut text = String::from("event\tactor\n");
    for (e, a) in [
        ("chess", "ann"),
        ("chess", "bob"),
        ("band", "bob"),
        ("band", "cat"),
        ("drama", "ann"),
        ("drama", "cat"),
        ("drama", "dan"),
        ("chess", "dan"),
        ("band", "eve"),
        ("drama", "eve"),
        ("chess", "eve"),
        ("band", "bob"),
    ] {
        text.push_str(&format!("{e}\t{a}\n"));
    }
    std::fs::write(&input, text).unwrap();
    let o = run(&[
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--method",
        "exact",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8(o.stderr.clone()).unwrap();
    assert!(stderr.contains("collapsed 1 duplicate edges"));
    let report = stdout(&o);
    assert!(report.contains("events: 3  actors: 5"));
    assert!(report.contains("method: newton_exact"));
}

#[test]
fn boundary_degree_is_reported_with_exit_zero() {
    let input = scratch("boundary.csv");
    std::fs::write(&input, "1,1,1\n1,0,0\n0,1,0\n").unwrap();
    let o = run(&[
        "fit",
        "--input",
        input.to_str().unwrap(),
        "--format",
        "dense",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout(&o);
    assert!(report.contains("MLE: does not exist (boundary degrees: 1 events"));
    assert!(!report.contains("## events"));
}

#[test]
fn exit_codes() {
    // usage: unknown flag and bad L
    assert_eq!(run(&["fit", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["coverage", "--m", "5", "--n", "5", "--L", "huge"])
            .status
            .code(),
        Some(2)
    );
    // input: missing file and non-binary entry
    let missing = scratch("does-not-exist.csv");
    assert_eq!(
        run(&["fit", "--input", missing.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    let bad = scratch("bad.csv");
    std::fs::write(&bad, "1,0\n0,2\n").unwrap();
    let o = run(&["fit", "--input", bad.to_str().unwrap(), "--format", "dense"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 2"));
    // runtime: nothing left after pruning
    let empty = scratch("empty.csv");
    std::fs::write(&empty, "0,0\n0,0\n").unwrap();
    assert_eq!(
        run(&[
            "fit",
            "--input",
            empty.to_str().unwrap(),
            "--format",
            "dense"
        ])
        .status
        .code(),
        Some(4)
    );
}

#[test]
fn config_file_and_flag_precedence() {
    let g = scratch("cfg.csv");
    assert!(run(&[
        "sample",
        "--m",
        "12",
        "--n",
        "25",
        "--seed",
        "8",
        "--out",
        g.to_str().unwrap()
    ])
    .status
    .success());
    let cfg = scratch("fit.toml");
    std::fs::write(
        &cfg,
        "method = \"fixed_point\"\nmax_iter = 5000\nlevel = 0.9\nformat = \"dense\"\n",
    )
    .unwrap();
    let o = run(&[
        "fit",
        "--input",
        g.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = stdout(&o);
    assert!(report.contains("method: fixed_point"));
    assert!(report.contains("estimate[90% CI]"));
    let o = run(&[
        "fit",
        "--input",
        g.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--method",
        "exact",
    ]);
    assert!(stdout(&o).contains("method: newton_exact"));

    std::fs::write(&cfg, "colour = \"red\"\n").unwrap();
    let o = run(&[
        "fit",
        "--input",
        g.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn qq_and_check_approx_outputs() {
    let o = run(&[
        "qq", "--m", "20", "--n", "30", "--reps", "30", "--seed", "1",
    ]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(csv.starts_with("theoretical,empirical\n"));
    assert_eq!(csv.lines().count(), 31);

    let o = run(&["check-approx", "--sizes", "10,20,40"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    // max error times mn stays flat at θ = 0
    for r in &rows {
        assert!((r[3] - 4.0).abs() < 1e-6, "{r:?}");
    }

    let o = run(&["consistency", "--sizes", "20,40", "--reps", "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}
