use std::ffi::c_char;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use bipbeta_ffi::*;

fn graph(m: usize, n: usize, x: &[u8]) -> *mut BbGraph {
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { bb_graph_from_dense(m, n, x.as_ptr(), &mut g) },
        BbStatus::Ok
    );
    g
}

fn last_error() -> String {
    let len = unsafe { bb_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as c_char; len + 1];
    unsafe { bb_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..len].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn fit_round_trip_matches_core() {
    let x = [1, 1, 0, 0, 1, 1, 1, 0, 0];
    let g = graph(3, 3, &x);
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { bb_fit(g, BbMethod::NewtonExact, 0.0, 0, &mut f) },
        BbStatus::Ok
    );
    let mut e = BbExistence::MaxIter;
    unsafe { bb_fit_existence(f, &mut e) };
    assert_eq!(e, BbExistence::Exists);

    let (mut a, mut b) = ([0.0; 3], [0.0; 2]);
    assert_eq!(
        unsafe { bb_fit_theta(f, a.as_mut_ptr(), 3, b.as_mut_ptr(), 2) },
        BbStatus::Ok
    );
    let core = bipbeta::fit(
        &bipbeta::BipartiteGraph::from_dense(3, 3, x.to_vec()).unwrap(),
        &bipbeta::FitConfig::with_method(bipbeta::Method::NewtonExact),
    )
    .unwrap();
    assert_eq!(&a, core.theta_hat.alpha());
    assert_eq!(&b, core.theta_hat.beta());

    let (mut sa, mut sb) = ([0.0; 3], [0.0; 2]);
    let status = unsafe { bb_fit_standard_errors(f, sa.as_mut_ptr(), 3, sb.as_mut_ptr(), 2) };
    assert_eq!(status, BbStatus::Ok);
    assert!(sa.iter().chain(&sb).all(|s| *s > 0.0 && s.is_finite()));

    let (mut lo, mut hi) = (0.0, 0.0);
    let status =
        unsafe { bb_fit_contrast_interval(f, BbSide::Event, 0, 2, 0.95, &mut lo, &mut hi) };
    assert_eq!(status, BbStatus::Ok);
    assert!(lo < a[0] - a[2] && a[0] - a[2] < hi);
    let status =
        unsafe { bb_fit_contrast_interval(f, BbSide::Event, 1, 1, 0.95, &mut lo, &mut hi) };
    assert_eq!(status, BbStatus::InvalidArgument);

    let (mut it, mut norm, mut ll) = (0, 0.0, 0.0);
    unsafe { bb_fit_summary(f, &mut it, &mut norm, &mut ll) };
    assert!(norm <= 1e-8 && ll < 0.0 && it > 0);
    unsafe {
        bb_fit_free(f);
        bb_graph_free(g);
    }
}

#[test]
fn errors_are_reported() {
    let mut g = ptr::null_mut();
    let bad = [0, 2, 1, 0];
    assert_eq!(
        unsafe { bb_graph_from_dense(2, 2, bad.as_ptr(), &mut g) },
        BbStatus::InvalidGraph
    );
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(
        unsafe { bb_graph_from_dense(2, 2, ptr::null(), &mut g) },
        BbStatus::NullPointer
    );
    assert!(last_error().contains("null"));

    let g = graph(2, 2, &[0, 0, 0, 0]);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { bb_graph_prune(g, &mut p) }, BbStatus::InvalidGraph);
    unsafe { bb_graph_free(g) };
    unsafe { bb_graph_free(ptr::null_mut()) };
}

#[test]
fn boundary_degree_is_a_result_not_an_error() {
    let g = graph(2, 3, &[1, 1, 1, 1, 0, 0]);
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { bb_fit(g, BbMethod::NewtonApprox, 0.0, 0, &mut f) },
        BbStatus::Ok
    );
    let mut e = BbExistence::Exists;
    unsafe { bb_fit_existence(f, &mut e) };
    assert_eq!(e, BbExistence::BoundaryDegree);
    let (mut sa, mut sb) = ([0.0; 2], [0.0; 2]);
    let status = unsafe { bb_fit_standard_errors(f, sa.as_mut_ptr(), 2, sb.as_mut_ptr(), 2) };
    assert_eq!(status, BbStatus::InvalidArgument);
    unsafe {
        bb_fit_free(f);
        bb_graph_free(g);
    }
}

#[test]
fn sample_prune_and_dims() {
    let alpha = [0.0; 4];
    let beta = [0.0; 5];
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { bb_graph_sample(4, 6, alpha.as_ptr(), beta.as_ptr(), 9, &mut g) },
        BbStatus::Ok
    );
    let (mut m, mut n) = (0, 0);
    unsafe { bb_graph_dims(g, &mut m, &mut n) };
    assert_eq!((m, n), (4, 6));
    let mut x = [0u8; 24];
    assert_eq!(
        unsafe { bb_graph_entries(g, x.as_mut_ptr(), 24) },
        BbStatus::Ok
    );
    let theta = bipbeta::ParameterVector::zeros(4, 6);
    assert_eq!(&x[..], bipbeta::sample_graph(&theta, 9).as_slice());
    assert_eq!(
        unsafe { bb_graph_entries(g, x.as_mut_ptr(), 3) },
        BbStatus::BufferTooSmall
    );
    unsafe { bb_graph_free(g) };
}

fn target_dir() -> PathBuf {
    // tests/<name>-<hash> lives in target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let Some(cc) = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
    else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libbipbeta_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let out = std::env::temp_dir().join(format!("bipbeta_smoke_{}", std::process::id()));
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(
        run.status.success(),
        "smoke exited with {:?}",
        run.status.code()
    );
    let vals: Vec<f64> = String::from_utf8(run.stdout)
        .unwrap()
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(vals.len(), 5);
}
