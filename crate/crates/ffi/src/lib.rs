//! C ABI for feasikit.
//!
//! Handles are opaque pointers created by `fk_experiment_from_json` and
//! `fk_experiment_run` and released with the matching `fk_*_free`. Every fallible call
//! returns an [`FkStatus`]; on failure a message is kept per thread and can be
//! read with [`fk_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use feasikit::experiment::{parse_config_str, prepare, summarize, write_trace_csv, ConfigFile, Prepared};
use feasikit::solver::{self, Status, Trace};
use feasikit::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    PreconditionViolation = 5,
    InvalidInput = 6,
    NumericalFailure = 7,
    IoError = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Termination status of a run.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FkRunStatus {
    FiniteConvergence = 0,
    TolReached = 1,
    BudgetExhausted = 2,
}

/// A validated experiment ready to run.
pub struct FkExperiment {
    prepared: Prepared,
}

/// The result of running an experiment.
pub struct FkTrace {
    prepared: Prepared,
    trace: Trace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FkStatus {
    match e {
        Error::Parse(_) => FkStatus::ParseError,
        Error::Validation(_) | Error::InconsistentSpec(_) => FkStatus::ValidationError,
        Error::PreconditionViolation(_) | Error::HypothesisViolation(_) => FkStatus::PreconditionViolation,
        Error::NonFiniteIterate(_)
        | Error::DivergenceSuspected { .. }
        | Error::OracleBudgetExhausted { .. }
        | Error::ZeroSubgradientOutsideLevelSet
        | Error::NonpositivePhi(_) => FkStatus::NumericalFailure,
        Error::Io { .. } => FkStatus::IoError,
        _ => FkStatus::InvalidInput,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (FkStatus, String)>) -> FkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FkStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FkStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (FkStatus, String) {
    (status_of(&e), format!("{}: {e}", e.kind()))
}

fn null(what: &str) -> (FkStatus, String) {
    (FkStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FkStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (FkStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a single-experiment JSON config, runs the generator if any, and
/// checks the preconditions of the configured mode.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_experiment_from_json(json: *const c_char, out: *mut *mut FkExperiment) -> FkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let config = match parse_config_str(text).map_err(lib_err)? {
            ConfigFile::Single(c) => c,
            ConfigFile::Batch(_) => {
                return Err((FkStatus::ValidationError, "batch configs are not supported here".into()))
            }
        };
        let prepared = prepare(&config).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FkExperiment { prepared }));
        Ok(())
    })
}

/// # Safety
/// `exp` must come from [`fk_experiment_from_json`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn fk_experiment_free(exp: *mut FkExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Ambient dimension, or 0 for a NULL handle.
///
/// # Safety
/// `exp` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fk_experiment_dim(exp: *const FkExperiment) -> usize {
    exp.as_ref().map_or(0, |e| e.prepared.problem.dim())
}

/// Number of constraints, or 0 for a NULL handle.
///
/// # Safety
/// `exp` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fk_experiment_num_constraints(exp: *const FkExperiment) -> usize {
    exp.as_ref().map_or(0, |e| e.prepared.problem.m())
}

/// Runs the solver. Nothing is written to disk.
///
/// # Safety
/// `exp` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_experiment_run(exp: *const FkExperiment, out: *mut *mut FkTrace) -> FkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let exp = exp.as_ref().ok_or_else(|| null("experiment"))?;
        let p = &exp.prepared;
        let trace = solver::run(&p.problem, &p.solver).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(FkTrace { prepared: p.clone(), trace }));
        Ok(())
    })
}

/// # Safety
/// `trace` must come from [`fk_experiment_run`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn fk_trace_free(trace: *mut FkTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `trace` must be a live handle; `status` and `k` valid pointers (`k` may be
/// NULL). `k` receives the stopping index, or the step count when the budget
/// ran out.
#[no_mangle]
pub unsafe extern "C" fn fk_trace_status(trace: *const FkTrace, status: *mut FkRunStatus, k: *mut usize) -> FkStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let status = status.as_mut().ok_or_else(|| null("status"))?;
        *status = match t.trace.status {
            Status::FiniteConvergence(_) => FkRunStatus::FiniteConvergence,
            Status::TolReached(_) => FkRunStatus::TolReached,
            Status::BudgetExhausted => FkRunStatus::BudgetExhausted,
        };
        if let Some(k) = k.as_mut() {
            *k = t.trace.status.k().unwrap_or(t.trace.iterations());
        }
        Ok(())
    })
}

/// Number of steps taken, or 0 for a NULL handle.
///
/// # Safety
/// `trace` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fk_trace_iterations(trace: *const FkTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.iterations())
}

/// `max_i d(x_last, C_i)`, or NaN for a NULL handle.
///
/// # Safety
/// `trace` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn fk_trace_final_residual(trace: *const FkTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.trace.last().max_constraint_distance)
}

/// Copies the final iterate into `buf`, which must hold at least `len`
/// doubles. Fails with `BUFFER_TOO_SMALL` when `len` is below the dimension.
///
/// # Safety
/// `trace` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fk_trace_final_point(trace: *const FkTrace, buf: *mut f64, len: usize) -> FkStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let x = t
            .trace
            .last()
            .x
            .as_ref()
            .ok_or((FkStatus::InvalidInput, "trace was recorded without iterates".to_string()))?;
        let n = x.dim();
        if len < n {
            return Err((FkStatus::BufferTooSmall, format!("need {n} doubles, got {len}")));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, n).copy_from_slice(x.coords());
        Ok(())
    })
}

/// Writes the trace CSV to `path`.
///
/// # Safety
/// `trace` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fk_trace_write_csv(trace: *const FkTrace, path: *const c_char) -> FkStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let path = read_str(path, "path")?;
        let io = |e: std::io::Error| (FkStatus::IoError, format!("{path}: {e}"));
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        write_trace_csv(&t.trace, &mut w).map_err(io)?;
        w.flush().map_err(io)
    })
}

/// Run summary (status, diagnostics verdicts, final point) as a JSON string.
/// Release it with [`fk_string_free`].
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fk_trace_summary_json(trace: *const FkTrace, out: *mut *mut c_char) -> FkStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let summary = summarize(&t.prepared, &t.trace);
        let text = serde_json::to_string(&summary).map_err(|e| (FkStatus::InvalidInput, e.to_string()))?;
        *out = CString::new(text).map_err(|e| (FkStatus::InvalidInput, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn fk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
