//! C ABI over the `sumopt` solvers.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free` function. Every fallible call returns a [`SumoptStatus`];
//! the message of the last failure on the calling thread is available from
//! [`sumopt_last_error`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use sumopt::linalg::SparseRow;
use sumopt::ordering::{Ordering, OrderingKind};
use sumopt::problem::{synthetic, FiniteSumProblem, LinearModelData, LossKind};
use sumopt::prox::Regularizer;
use sumopt::solvers::{build_solver, Method, MethodConfig, Oracle, Solver, StepSize};
use sumopt::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Unsupported = 4,
    NotStronglyConvex = 5,
    Hypothesis = 6,
    NoConvergence = 7,
    Io = 8,
    Numerical = 9,
    Panic = 10,
}

/// Synthetic problem families.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumoptSynthetic {
    Ridge = 0,
    Logistic = 1,
    WorstCase = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumoptLoss {
    Logistic = 0,
    Squared = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumoptOrdering {
    Cyclic = 0,
    Permuted = 1,
    Random = 2,
}

/// Opaque problem handle.
pub struct SumoptProblem {
    inner: Arc<FiniteSumProblem>,
}

/// Opaque solver handle. Keeps its problem alive.
pub struct SumoptSolver {
    problem: Arc<FiniteSumProblem>,
    solver: Box<dyn Solver>,
    evals: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SumoptStatus {
    match e {
        Error::IndexOutOfRange { .. } | Error::InvalidParameter { .. } | Error::Parse { .. } => {
            SumoptStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } => SumoptStatus::DimensionMismatch,
        Error::Unsupported(_) | Error::NotReady(_) => SumoptStatus::Unsupported,
        Error::NotStronglyConvex(_) => SumoptStatus::NotStronglyConvex,
        Error::Hypothesis(_) | Error::ConstantViolation { .. } => SumoptStatus::Hypothesis,
        Error::NoConvergence(_) => SumoptStatus::NoConvergence,
        Error::Io(_) => SumoptStatus::Io,
        Error::NonFinite(_) | Error::InnerSolve { .. } => SumoptStatus::Numerical,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (SumoptStatus, String)>) -> SumoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SumoptStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside sumopt".into());
            SumoptStatus::Panic
        }
    }
}

fn lib(e: Error) -> (SumoptStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SumoptStatus, String) {
    (SumoptStatus::NullPointer, format!("null pointer: {what}"))
}

fn bad(msg: impl Into<String>) -> (SumoptStatus, String) {
    (SumoptStatus::InvalidArgument, msg.into())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (SumoptStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T, out: *mut *mut T) {
    unsafe { *out = Box::into_raw(Box::new(v)) };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sumopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sumopt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let k = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

/// Builds a seeded synthetic problem. For the worst-case instance `d` is
/// ignored and `l2` must be 0.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn sumopt_problem_synthetic(
    kind: SumoptSynthetic,
    n: usize,
    d: usize,
    l2: f64,
    seed: u64,
    out: *mut *mut SumoptProblem,
) -> SumoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = match kind {
            SumoptSynthetic::Ridge => synthetic::ridge(n, d, l2, seed),
            SumoptSynthetic::Logistic => synthetic::logistic(n, d, l2, seed),
            SumoptSynthetic::WorstCase if l2 == 0.0 => FiniteSumProblem::worst_case(n),
            SumoptSynthetic::WorstCase => return Err(bad("l2 must be 0 for the worst-case instance")),
        }
        .map_err(lib)?;
        boxed(SumoptProblem { inner: Arc::new(p) }, out);
        Ok(())
    })
}

/// Linear model from a row-major dense `n × d` matrix and `n` labels, with
/// ridge `l2` in every term and an optional `l1 ≥ 0` regularizer.
///
/// # Safety
/// `features` must hold `n·d` values, `labels` `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sumopt_problem_dense(
    features: *const f64,
    labels: *const f64,
    n: usize,
    d: usize,
    loss: SumoptLoss,
    l2: f64,
    l1: f64,
    out: *mut *mut SumoptProblem,
) -> SumoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let total = n.checked_mul(d).ok_or_else(|| bad("n*d overflows"))?;
        let a = slice(features, total, "features")?;
        let y = slice(labels, n, "labels")?;
        let rows = (0..n).map(|i| SparseRow::from_dense(&a[i * d..(i + 1) * d])).collect();
        let loss = match loss {
            SumoptLoss::Logistic => LossKind::Logistic,
            SumoptLoss::Squared => LossKind::Squared,
        };
        let data = LinearModelData::new(rows, y.to_vec(), loss, d).map_err(lib)?;
        let reg = if l1 > 0.0 { Regularizer::L1 { lambda: l1 } } else { Regularizer::None };
        let p = FiniteSumProblem::linear(data, l2, reg).map_err(lib)?;
        boxed(SumoptProblem { inner: Arc::new(p) }, out);
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from a `sumopt_problem_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn sumopt_problem_free(p: *mut SumoptProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Writes the number of terms and the dimension.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sumopt_problem_dims(p: *const SumoptProblem, n: *mut usize, d: *mut usize) -> SumoptStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if n.is_null() || d.is_null() {
            return Err(null("n/d"));
        }
        *n = p.inner.n();
        *d = p.inner.d();
        Ok(())
    })
}

/// Full objective `F(x)` including the regularizer.
///
/// # Safety
/// `x` must hold `len` values; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sumopt_problem_objective(
    p: *const SumoptProblem,
    x: *const f64,
    len: usize,
    value: *mut f64,
) -> SumoptStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        if len != p.inner.d() {
            return Err(lib(Error::DimensionMismatch { expected: p.inner.d(), got: len }));
        }
        *value = p.inner.objective(slice(x, len, "x")?);
        Ok(())
    })
}

/// Creates a solver by method name (`"saga"`, `"finito"`, ...). A `step ≤ 0`
/// selects the default step for the method. `x0` may be null for zeros.
///
/// # Safety
/// `method` must be a NUL-terminated string, `x0` null or `len` values.
#[no_mangle]
pub unsafe extern "C" fn sumopt_solver_new(
    p: *const SumoptProblem,
    method: *const c_char,
    step: f64,
    x0: *const f64,
    len: usize,
    seed: u64,
    out: *mut *mut SumoptSolver,
) -> SumoptStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("problem"))?;
        if method.is_null() {
            return Err(null("method"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let name = CStr::from_ptr(method).to_str().map_err(|_| bad("method is not UTF-8"))?;
        let m: Method = name.parse().map_err(lib)?;
        let mut cfg = MethodConfig::new(m).with_step(if step > 0.0 { StepSize::Fixed(step) } else { StepSize::Auto });
        cfg.seed = seed;
        let problem = p.inner.clone();
        let x0 = if x0.is_null() { vec![0.0; problem.d()] } else { slice(x0, len, "x0")?.to_vec() };
        let mut oracle = Oracle::new(&problem);
        let solver = build_solver(&mut oracle, &cfg, &x0).map_err(lib)?;
        let evals = oracle.evals();
        boxed(SumoptSolver { problem, solver, evals }, out);
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a handle from [`sumopt_solver_new`].
#[no_mangle]
pub unsafe extern "C" fn sumopt_solver_free(s: *mut SumoptSolver) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// One step on term `j` (0-based).
///
/// # Safety
/// `s` must be a valid solver handle.
#[no_mangle]
pub unsafe extern "C" fn sumopt_solver_step(s: *mut SumoptSolver, j: usize) -> SumoptStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("solver"))?;
        if j >= s.problem.n() {
            return Err(lib(Error::IndexOutOfRange { index: j, n: s.problem.n() }));
        }
        let mut oracle = Oracle::new(&s.problem);
        s.solver.step(&mut oracle, j).map_err(lib)?;
        s.evals += oracle.evals();
        Ok(())
    })
}

/// `steps` steps with indices drawn from `ordering` seeded by `seed`.
///
/// # Safety
/// `s` must be a valid solver handle.
#[no_mangle]
pub unsafe extern "C" fn sumopt_solver_run(
    s: *mut SumoptSolver,
    steps: u64,
    ordering: SumoptOrdering,
    seed: u64,
) -> SumoptStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("solver"))?;
        let kind = match ordering {
            SumoptOrdering::Cyclic => OrderingKind::Cyclic,
            SumoptOrdering::Permuted => OrderingKind::Permuted,
            SumoptOrdering::Random => OrderingKind::Randomized,
        };
        let mut order = Ordering::new(kind, s.problem.n(), seed).map_err(lib)?;
        let mut oracle = Oracle::new(&s.problem);
        for _ in 0..steps {
            s.solver.step(&mut oracle, order.next_index()).map_err(lib)?;
        }
        s.evals += oracle.evals();
        Ok(())
    })
}

/// Copies the current iterate into `out` (`len` must equal the dimension).
///
/// # Safety
/// `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sumopt_solver_iterate(s: *const SumoptSolver, out: *mut f64, len: usize) -> SumoptStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("solver"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = s.solver.iterate();
        if len != x.len() {
            return Err(lib(Error::DimensionMismatch { expected: x.len(), got: len }));
        }
        ptr::copy_nonoverlapping(x.as_ptr(), out, len);
        Ok(())
    })
}

/// Steps taken and gradient evaluations so far.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sumopt_solver_counts(s: *const SumoptSolver, steps: *mut u64, evals: *mut u64) -> SumoptStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("solver"))?;
        if steps.is_null() || evals.is_null() {
            return Err(null("steps/evals"));
        }
        *steps = s.solver.steps();
        *evals = s.evals;
        Ok(())
    })
}
