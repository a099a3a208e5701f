//! C ABI over `greedycd`.
//!
//! Objects cross the boundary as opaque handles (`GcdProblem`, `GcdTrace`,
//! `GcdRace`) created by the `gcd_problem_*` constructors, `gcd_run` and
//! `gcd_race`, and released by the matching `gcd_*_free`. Every fallible call returns a [`GcdStatus`];
//! on failure [`gcd_last_error`] describes the error for the calling thread.
//! Panics are caught at the boundary and reported as [`GcdStatus::Panic`].
//!
//! Array getters follow one protocol: pass `out = NULL` to query the length
//! through `written`; otherwise `cap` must be at least that length.

// `!(x >= 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use greedycd::descent::{race, run, write_csv, RaceEntry, RunOptions, RunStatus, RunTrace, StepStrategy};
use greedycd::harness::{gen_experiment, ExperimentKind, ExperimentSpec};
use greedycd::linalg::SparseMatrix;
use greedycd::problems::{load_manifest, DenseQuadratic, LeastSquares, Problem, ScaleConvention, SeparableTerm};
use greedycd::rules::{ErrorSchedule, RuleKind, SelectionRule};
use greedycd::tracker::Backend;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NonFinite = 4,
    /// Rule, step and problem do not define a method.
    Incompatible = 5,
    /// A progress bound or internal check failed during a run.
    CheckFailed = 6,
    Io = 7,
    Parse = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcdBackend {
    Heap = 0,
    Scan = 1,
    Nns = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcdRunStatus {
    Converged = 0,
    MaxIters = 1,
    Diverged = 2,
}

/// Run settings. Obtain defaults from [`gcd_run_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GcdRunOptions {
    /// Iteration cap; ignored (library default `50n`) when `default_max_iters`.
    pub max_iters: u64,
    pub default_max_iters: bool,
    pub tol: f64,
    /// Seed for randomized rules; the master seed for races.
    pub seed: u64,
    pub backend: GcdBackend,
    /// Fail with `CheckFailed` if a per-iteration progress bound is violated.
    pub check_bounds: bool,
    /// Constant error level for the approximate rules.
    pub eps: f64,
}

/// Problem handle with its default starting point.
pub struct GcdProblem {
    problem: Problem,
    x0: Vec<f64>,
}

pub struct GcdTrace {
    trace: RunTrace,
}

pub struct GcdRace {
    traces: Vec<GcdTrace>,
}

#[derive(Debug, thiserror::Error)]
enum FfiError {
    #[error("null pointer: {0}")]
    Null(&'static str),
    #[error("{0} is not valid UTF-8")]
    Utf8(&'static str),
    #[error("buffer holds {cap} values, {need} needed")]
    BufferTooSmall { cap: usize, need: usize },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] greedycd::Error),
}

impl FfiError {
    fn status(&self) -> GcdStatus {
        use greedycd::Error as E;
        match self {
            FfiError::Null(_) => GcdStatus::NullPointer,
            FfiError::Utf8(_) | FfiError::Invalid(_) => GcdStatus::InvalidArgument,
            FfiError::BufferTooSmall { .. } => GcdStatus::BufferTooSmall,
            FfiError::Core(e) => match e {
                E::DimensionMismatch { .. } => GcdStatus::DimensionMismatch,
                E::NonFinite(_) => GcdStatus::NonFinite,
                E::Incompatible(_) => GcdStatus::Incompatible,
                E::BoundViolated { .. } | E::CheckFailed(_) => GcdStatus::CheckFailed,
                E::Io(_) => GcdStatus::Io,
                E::Parse { .. } | E::Json(_) => GcdStatus::Parse,
                _ => GcdStatus::InvalidArgument,
            },
        }
    }
}

type FfiResult<T> = Result<T, FfiError>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> GcdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GcdStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            e.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            GcdStatus::Panic
        }
    }
}

unsafe fn cstr<'a>(p: *const c_char, what: &'static str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn href<'a, T>(p: *const T, what: &'static str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(FfiError::Null(what))
}

unsafe fn write_out<T>(out: *mut T, what: &'static str, v: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(FfiError::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, cap: usize, written: *mut usize) -> FfiResult<()> {
    write_out(written, "written", src.len())?;
    if out.is_null() {
        return Ok(());
    }
    if cap < src.len() {
        return Err(FfiError::BufferTooSmall { cap, need: src.len() });
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn parse_rule(s: &str) -> FfiResult<RuleKind> {
    Ok(s.parse()?)
}

fn parse_step(s: Option<&str>, rule: RuleKind) -> FfiResult<StepStrategy> {
    match s {
        None | Some("") => Ok(StepStrategy::default_for(rule)),
        Some(s) => Ok(s.parse()?),
    }
}

fn run_options(o: &GcdRunOptions) -> FfiResult<RunOptions> {
    if !(o.tol >= 0.0) || !(o.eps >= 0.0) {
        return Err(FfiError::Invalid("tol and eps must be non-negative".into()));
    }
    Ok(RunOptions {
        max_iters: (!o.default_max_iters).then_some(o.max_iters as usize),
        tol: o.tol,
        backend: match o.backend {
            GcdBackend::Heap => Backend::Heap,
            GcdBackend::Scan => Backend::Scan,
            GcdBackend::Nns => Backend::Nns,
        },
        check_bounds: o.check_bounds,
        ..RunOptions::default()
    })
}

unsafe fn start_point(p: &GcdProblem, x0: *const f64, n: usize) -> FfiResult<&[f64]> {
    if x0.is_null() {
        return Ok(&p.x0);
    }
    if n != p.problem.dim() {
        return Err(greedycd::Error::DimensionMismatch { expected: p.problem.dim(), got: n }.into());
    }
    Ok(std::slice::from_raw_parts(x0, n))
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next `gcd_*` call on the same thread.
#[no_mangle]
pub extern "C" fn gcd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn gcd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn gcd_run_options_default() -> GcdRunOptions {
    let d = RunOptions::default();
    GcdRunOptions {
        max_iters: 0,
        default_max_iters: true,
        tol: d.tol,
        seed: 0,
        backend: GcdBackend::Heap,
        check_bounds: d.check_bounds,
        eps: 0.0,
    }
}

/// Loads a problem manifest (JSON). The default start is the manifest's
/// `x0`, or zero.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_from_manifest(path: *const c_char, out: *mut *mut GcdProblem) -> GcdStatus {
    guard(|| {
        let path = cstr(path, "path")?;
        let (manifest, problem) = load_manifest(Path::new(path))?;
        let x0 = manifest.x0.unwrap_or_else(|| vec![0.0; problem.dim()]);
        write_out(out, "out", boxed(GcdProblem { problem, x0 }))
    })
}

/// Generates a synthetic experiment instance. `kind` is one of `sparse_ls`,
/// `sparse_logistic`, `dense_overdet_ls`, `l1_underdet_ls`, `two_moons`;
/// `m = 0` for `two_moons`.
///
/// # Safety
/// `kind` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_generate(
    kind: *const c_char,
    m: usize,
    n: usize,
    lambda: f64,
    seed: u64,
    out: *mut *mut GcdProblem,
) -> GcdStatus {
    guard(|| {
        let kind: ExperimentKind = cstr(kind, "kind")?.parse()?;
        let exp = gen_experiment(&ExperimentSpec { kind, m, n, seed, lambda })?;
        write_out(out, "out", boxed(GcdProblem { problem: exp.problem, x0: exp.x0 }))
    })
}

/// `½xᵀHx + cᵀx`, `h` row-major `n×n` symmetric.
///
/// # Safety
/// `h` must hold `n·n` doubles and `c` `n`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_dense_quadratic(
    n: usize,
    h: *const f64,
    c: *const f64,
    out: *mut *mut GcdProblem,
) -> GcdStatus {
    guard(|| {
        let len = n.checked_mul(n).ok_or_else(|| FfiError::Invalid("n too large".into()))?;
        let q = DenseQuadratic::new(n, slice(h, len, "h")?.to_vec(), slice(c, n, "c")?.to_vec())?;
        write_out(out, "out", boxed(GcdProblem { problem: Problem::smooth(q), x0: vec![0.0; n] }))
    })
}

/// `1/(2m)‖Ax − b‖² + (l2/2)‖x‖² + l1‖x‖₁` from a row-major dense `A`.
/// `l1 = 0` gives a smooth problem.
///
/// # Safety
/// `a` must hold `m·n` doubles and `b` `m`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_least_squares(
    m: usize,
    n: usize,
    a: *const f64,
    b: *const f64,
    l2: f64,
    l1: f64,
    out: *mut *mut GcdProblem,
) -> GcdStatus {
    guard(|| {
        let len = m.checked_mul(n).ok_or_else(|| FfiError::Invalid("m·n too large".into()))?;
        let a = SparseMatrix::from_dense(m, n, slice(a, len, "a")?)?;
        let ls = LeastSquares::with_convention(a, slice(b, m, "b")?.to_vec(), l2, ScaleConvention::PerSample)?;
        let problem = if l1 == 0.0 {
            Problem::smooth(ls)
        } else {
            if !(l1 > 0.0) {
                return Err(FfiError::Invalid(format!("l1 weight {l1} must be non-negative")));
            }
            Problem::composite(ls, vec![SeparableTerm::Abs { weight: l1 }; n])?
        };
        write_out(out, "out", boxed(GcdProblem { problem, x0: vec![0.0; n] }))
    })
}

/// # Safety
/// `p` must be NULL or a live problem handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_free(p: *mut GcdProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension, or 0 for NULL.
///
/// # Safety
/// `p` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_dim(p: *const GcdProblem) -> usize {
    p.as_ref().map_or(0, |p| p.problem.dim())
}

/// # Safety
/// `p` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_is_composite(p: *const GcdProblem) -> bool {
    p.as_ref().is_some_and(|p| p.problem.is_composite())
}

/// Objective `F(x)`.
///
/// # Safety
/// `x` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_value(p: *const GcdProblem, x: *const f64, n: usize, out: *mut f64) -> GcdStatus {
    guard(|| {
        let p = href(p, "problem")?;
        let x = slice(x, n, "x")?;
        if n != p.problem.dim() {
            return Err(greedycd::Error::DimensionMismatch { expected: p.problem.dim(), got: n }.into());
        }
        write_out(out, "out", p.problem.value(x))
    })
}

/// Default starting point.
///
/// # Safety
/// `out` must be NULL or hold `cap` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_problem_x0(p: *const GcdProblem, out: *mut f64, cap: usize, written: *mut usize) -> GcdStatus {
    guard(|| copy_out(&href(p, "problem")?.x0, out, cap, written))
}

/// Runs one rule. `step` may be NULL or empty for the rule's default
/// strategy; `x0` may be NULL for the problem's default start.
///
/// # Safety
/// Strings must be NUL-terminated; `x0` must be NULL or hold `n` doubles;
/// `opts` must point to a valid struct; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_run(
    p: *const GcdProblem,
    rule: *const c_char,
    step: *const c_char,
    x0: *const f64,
    n: usize,
    opts: *const GcdRunOptions,
    out: *mut *mut GcdTrace,
) -> GcdStatus {
    guard(|| {
        let p = href(p, "problem")?;
        let o = href(opts, "opts")?;
        let kind = parse_rule(cstr(rule, "rule")?)?;
        let step = parse_step((!step.is_null()).then(|| cstr(step, "step")).transpose()?, kind)?;
        let x0 = start_point(p, x0, n)?;
        let mut sel = SelectionRule::new(kind, o.seed).with_schedule(ErrorSchedule::Constant(o.eps));
        let trace = run(&p.problem, &mut sel, step, x0, &run_options(o)?)?;
        write_out(out, "out", boxed(GcdTrace { trace }))
    })
}

/// Races comma-separated `rules` (each with its default step) from the same
/// start, on independent streams of `opts.seed`.
///
/// # Safety
/// As for [`gcd_run`].
#[no_mangle]
pub unsafe extern "C" fn gcd_race(
    p: *const GcdProblem,
    rules: *const c_char,
    x0: *const f64,
    n: usize,
    opts: *const GcdRunOptions,
    out: *mut *mut GcdRace,
) -> GcdStatus {
    guard(|| {
        let p = href(p, "problem")?;
        let o = href(opts, "opts")?;
        let entries = cstr(rules, "rules")?
            .split(',')
            .map(|r| {
                let mut e = RaceEntry::new(parse_rule(r.trim())?);
                e.schedule = ErrorSchedule::Constant(o.eps);
                Ok(e)
            })
            .collect::<FfiResult<Vec<_>>>()?;
        let x0 = start_point(p, x0, n)?;
        let traces = race(&p.problem, &entries, x0, &run_options(o)?, o.seed)?;
        let traces = traces.into_iter().map(|trace| GcdTrace { trace }).collect();
        write_out(out, "out", boxed(GcdRace { traces }))
    })
}

/// # Safety
/// `r` must be NULL or a live race handle.
#[no_mangle]
pub unsafe extern "C" fn gcd_race_len(r: *const GcdRace) -> usize {
    r.as_ref().map_or(0, |r| r.traces.len())
}

/// Borrowed trace `j`, owned by the race; NULL if out of range.
///
/// # Safety
/// `r` must be NULL or a live race handle. Do not free the result.
#[no_mangle]
pub unsafe extern "C" fn gcd_race_trace(r: *const GcdRace, j: usize) -> *const GcdTrace {
    r.as_ref().and_then(|r| r.traces.get(j)).map_or(ptr::null(), |t| t as *const GcdTrace)
}

/// # Safety
/// `r` must be NULL or a live race handle; it and its traces are invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn gcd_race_free(r: *mut GcdRace) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `t` must be NULL or a trace returned by [`gcd_run`]; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn gcd_trace_free(t: *mut GcdTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of rows (iterations + 1), or 0 for NULL.
///
/// # Safety
/// `t` must be NULL or a live trace.
#[no_mangle]
pub unsafe extern "C" fn gcd_trace_len(t: *const GcdTrace) -> usize {
    t.as_ref().map_or(0, |t| t.trace.records.len())
}

/// # Safety
/// `t` must be NULL or a live trace; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_trace_status(t: *const GcdTrace, out: *mut GcdRunStatus) -> GcdStatus {
    guard(|| {
        let s = match href(t, "trace")?.trace.status {
            RunStatus::Converged => GcdRunStatus::Converged,
            RunStatus::MaxIters => GcdRunStatus::MaxIters,
            RunStatus::Diverged => GcdRunStatus::Diverged,
        };
        write_out(out, "out", s)
    })
}

/// Objective per row.
///
/// # Safety
/// `out` must be NULL or hold `cap` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_trace_objectives(t: *const GcdTrace, out: *mut f64, cap: usize, written: *mut usize) -> GcdStatus {
    guard(|| {
        let v: Vec<f64> = href(t, "trace")?.trace.records.iter().map(|r| r.objective).collect();
        copy_out(&v, out, cap, written)
    })
}

/// Selected coordinate per row; row 0 (the start) is -1.
///
/// # Safety
/// `out` must be NULL or hold `cap` values; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_trace_coords(t: *const GcdTrace, out: *mut i64, cap: usize, written: *mut usize) -> GcdStatus {
    guard(|| {
        let v: Vec<i64> = href(t, "trace")?
            .trace
            .records
            .iter()
            .map(|r| r.coord.map_or(-1, |c| c as i64))
            .collect();
        copy_out(&v, out, cap, written)
    })
}

/// Final iterate.
///
/// # Safety
/// `out` must be NULL or hold `cap` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gcd_trace_x(t: *const GcdTrace, out: *mut f64, cap: usize, written: *mut usize) -> GcdStatus {
    guard(|| copy_out(&href(t, "trace")?.trace.x_final, out, cap, written))
}

/// Writes the trace as CSV.
///
/// # Safety
/// `t` must be a live trace and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gcd_trace_write_csv(t: *const GcdTrace, path: *const c_char) -> GcdStatus {
    guard(|| {
        let t = href(t, "trace")?;
        let f = std::fs::File::create(cstr(path, "path")?).map_err(greedycd::Error::from)?;
        let mut w = std::io::BufWriter::new(f);
        write_csv(&t.trace.records, &mut w)?;
        w.flush().map_err(greedycd::Error::from)?;
        Ok(())
    })
}
