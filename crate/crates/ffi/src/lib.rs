//! C ABI over `bipbeta`.
//!
//! Graphs and fits are opaque heap handles owned by the caller and released
//! with their `_free` function. Every fallible call returns a [`BbStatus`];
//! on failure a human-readable message is kept per thread and can be copied
//! out with [`bb_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bipbeta::inference::InferenceResult;
use bipbeta::{
    fit, infer, prune_zero_degree, sample_graph, BipartiteGraph, Error, Existence, FitConfig,
    FitResult, Method, ParameterVector, Side,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGraph = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbMethod {
    NewtonExact = 0,
    NewtonApprox = 1,
    FixedPoint = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbExistence {
    Exists = 0,
    /// A degree is 0 or maximal, so no finite MLE exists.
    BoundaryDegree = 1,
    Diverged = 2,
    MaxIter = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BbSide {
    Event = 0,
    Actor = 1,
}

/// Opaque binary event-by-actor matrix.
pub struct BbGraph {
    inner: BipartiteGraph,
}

/// Opaque fit result.
pub struct BbFit {
    result: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> BbStatus {
    match err {
        Error::InvalidGraph(_)
        | Error::AllPruned
        | Error::NonBinaryEntry { .. }
        | Error::EmptyInput => BbStatus::InvalidGraph,
        Error::SingularAugmented(_) | Error::NumericallySingular | Error::TooLarge { .. } => {
            BbStatus::Numerical
        }
        _ => BbStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> BbStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Runs `f`, converting panics into [`BbStatus::Panic`].
fn guard(f: impl FnOnce() -> BbStatus) -> BbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            BbStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            set_error(concat!("null pointer: ", stringify!($p)));
            return BbStatus::NullPointer;
        })+
    };
}

/// Copies `src` into a caller buffer of length `len`.
///
/// # Safety
/// `dst` must be valid for `len` writes.
unsafe fn write_out(src: &[f64], dst: *mut f64, len: usize) -> BbStatus {
    if len < src.len() {
        set_error(format!("buffer holds {len} values, need {}", src.len()));
        return BbStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    BbStatus::Ok
}

/// Builds a graph from a row-major `m × n` matrix of 0/1 bytes.
///
/// # Safety
/// `x` must point to `m * n` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_graph_from_dense(
    m: usize,
    n: usize,
    x: *const u8,
    out: *mut *mut BbGraph,
) -> BbStatus {
    non_null!(x, out);
    guard(|| {
        let Some(len) = m.checked_mul(n) else {
            return fail(Error::InvalidGraph("m * n overflows".into()));
        };
        let data = std::slice::from_raw_parts(x, len).to_vec();
        match BipartiteGraph::from_dense(m, n, data) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(BbGraph { inner }));
                BbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_graph_free(g: *mut BbGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle; `m` and `n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_graph_dims(
    g: *const BbGraph,
    m: *mut usize,
    n: *mut usize,
) -> BbStatus {
    non_null!(g, m, n);
    *m = (*g).inner.m();
    *n = (*g).inner.n();
    BbStatus::Ok
}

/// Row-major copy of the 0/1 entries into `x`, which holds `len` bytes.
///
/// # Safety
/// `g` must be a live handle and `x` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn bb_graph_entries(g: *const BbGraph, x: *mut u8, len: usize) -> BbStatus {
    non_null!(g, x);
    let src = (*g).inner.as_slice();
    if len < src.len() {
        set_error(format!("buffer holds {len} bytes, need {}", src.len()));
        return BbStatus::BufferTooSmall;
    }
    ptr::copy_nonoverlapping(src.as_ptr(), x, src.len());
    BbStatus::Ok
}

/// New graph with every zero-degree event and actor removed.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bb_graph_prune(g: *const BbGraph, out: *mut *mut BbGraph) -> BbStatus {
    non_null!(g, out);
    guard(|| match prune_zero_degree(&(*g).inner) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(BbGraph { inner: p.graph }));
            BbStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Samples a graph with `alpha[0..m]` and `beta[0..n-1]`; the last actor is
/// the reference with parameter 0.
///
/// # Safety
/// `alpha` must hold `m` values, `beta` `n - 1` values, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn bb_graph_sample(
    m: usize,
    n: usize,
    alpha: *const f64,
    beta: *const f64,
    seed: u64,
    out: *mut *mut BbGraph,
) -> BbStatus {
    non_null!(alpha, beta, out);
    if m == 0 || n == 0 {
        return fail(Error::InvalidParameters("m and n must be positive".into()));
    }
    guard(|| {
        let a = std::slice::from_raw_parts(alpha, m).to_vec();
        let b = std::slice::from_raw_parts(beta, n - 1).to_vec();
        match ParameterVector::new(a, b) {
            Ok(theta) => {
                let inner = sample_graph(&theta, seed);
                *out = Box::into_raw(Box::new(BbGraph { inner }));
                BbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Fits the model. `tol <= 0` and `max_iter == 0` select the defaults.
///
/// Non-existence of the MLE is not an error: the fit handle is returned and
/// [`bb_fit_existence`] reports it.
///
/// # Safety
/// `g` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bb_fit(
    g: *const BbGraph,
    method: BbMethod,
    tol: f64,
    max_iter: usize,
    out: *mut *mut BbFit,
) -> BbStatus {
    non_null!(g, out);
    guard(|| {
        let mut cfg = FitConfig::with_method(match method {
            BbMethod::NewtonExact => Method::NewtonExact,
            BbMethod::NewtonApprox => Method::NewtonApprox,
            BbMethod::FixedPoint => Method::FixedPoint,
        });
        if tol > 0.0 {
            cfg.tol_score = tol;
        }
        if max_iter > 0 {
            cfg.max_iter = max_iter;
        }
        match fit(&(*g).inner, &cfg) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(BbFit { result }));
                BbStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `f` must be null or a handle from [`bb_fit`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bb_fit_free(f: *mut BbFit) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bb_fit_existence(f: *const BbFit, out: *mut BbExistence) -> BbStatus {
    non_null!(f, out);
    *out = match (*f).result.existence {
        Existence::Exists => BbExistence::Exists,
        Existence::BoundaryDegree { .. } => BbExistence::BoundaryDegree,
        Existence::Diverged => BbExistence::Diverged,
        Existence::MaxIter => BbExistence::MaxIter,
    };
    BbStatus::Ok
}

/// # Safety
/// `f` must be a live handle and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn bb_fit_summary(
    f: *const BbFit,
    iterations: *mut usize,
    score_norm: *mut f64,
    log_likelihood: *mut f64,
) -> BbStatus {
    non_null!(f, iterations, score_norm, log_likelihood);
    let r = &(*f).result;
    *iterations = r.iterations;
    *score_norm = r.final_score_norm;
    *log_likelihood = r.log_likelihood;
    BbStatus::Ok
}

/// Copies `α̂` (m values) and `β̂` without the reference actor (n − 1 values).
///
/// # Safety
/// `alpha` and `beta` must be valid for `alpha_len` and `beta_len` writes.
#[no_mangle]
pub unsafe extern "C" fn bb_fit_theta(
    f: *const BbFit,
    alpha: *mut f64,
    alpha_len: usize,
    beta: *mut f64,
    beta_len: usize,
) -> BbStatus {
    non_null!(f, alpha, beta);
    let theta = &(*f).result.theta_hat;
    match write_out(theta.alpha(), alpha, alpha_len) {
        BbStatus::Ok => write_out(theta.beta(), beta, beta_len),
        other => other,
    }
}

fn inference_of(f: &BbFit, level: f64) -> Result<InferenceResult, BbStatus> {
    if !f.result.converged {
        set_error("no standard errors: the fit did not converge");
        return Err(BbStatus::InvalidArgument);
    }
    infer(&f.result.theta_hat, level).map_err(fail)
}

/// Plug-in standard errors, same layout as [`bb_fit_theta`].
///
/// # Safety
/// `se_alpha` and `se_beta` must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn bb_fit_standard_errors(
    f: *const BbFit,
    se_alpha: *mut f64,
    alpha_len: usize,
    se_beta: *mut f64,
    beta_len: usize,
) -> BbStatus {
    non_null!(f, se_alpha, se_beta);
    guard(|| match inference_of(&*f, 0.95) {
        Ok(inf) => match write_out(&inf.se_alpha, se_alpha, alpha_len) {
            BbStatus::Ok => write_out(&inf.se_beta, se_beta, beta_len),
            other => other,
        },
        Err(status) => status,
    })
}

/// Wald interval for the difference of two parameters on one side.
/// Indices are 0-based; actor index `n − 1` is the reference actor.
///
/// # Safety
/// `f` must be a live handle; `low` and `high` writable.
#[no_mangle]
pub unsafe extern "C" fn bb_fit_contrast_interval(
    f: *const BbFit,
    side: BbSide,
    i: usize,
    j: usize,
    level: f64,
    low: *mut f64,
    high: *mut f64,
) -> BbStatus {
    non_null!(f, low, high);
    guard(|| {
        let side = match side {
            BbSide::Event => Side::Event,
            BbSide::Actor => Side::Actor,
        };
        let interval = inference_of(&*f, level)
            .and_then(|inf| inf.contrast_interval(side, i, j).map_err(fail));
        match interval {
            Ok(iv) => {
                *low = iv.low;
                *high = iv.high;
                BbStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to fit. Returns the full message length without the NUL, so a
/// caller can size a buffer with a first call passing `len = 0`.
///
/// # Safety
/// `buf` must be valid for `len` writes, or null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn bb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let k = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::AllPruned), BbStatus::InvalidGraph);
        assert_eq!(status_of(&Error::NumericallySingular), BbStatus::Numerical);
        assert_eq!(status_of(&Error::SameIndex(1)), BbStatus::InvalidArgument);
    }

    #[test]
    fn panics_are_contained() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, BbStatus::Panic);
        let mut buf = [0 as c_char; 32];
        let len = unsafe { bb_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(len, "internal panic".len());
    }
}
