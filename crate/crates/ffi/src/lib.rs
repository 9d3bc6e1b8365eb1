//! C ABI over the `qcqo` crate.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`QcqoStatus`]; on failure a message is available from
//! [`qcqo_last_error`] on the same thread until the next failing call.
//!
//! Array arguments are `(pointer, length)` pairs. Matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use qcqo::experiment::{SolverConfig, SolverKind};
use qcqo::linreg::{generate_synthetic, read_dataset, write_dataset, RegressionDataset};
use qcqo::optimizer::{optimize, StepSchedule, StoppingRule, Trajectory};
use qcqo::quad_model::QuadraticProgram;
use qcqo::qubo::{QuboInstance, QuboSolver, DEFAULT_EXHAUSTIVE_CAP};
use qcqo::Error;

/// Result codes. `QCQO_STATUS_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcqoStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    NotSquare = 3,
    NonBinary = 4,
    TooLarge = 5,
    InvalidParameter = 6,
    Singular = 7,
    NotConvex = 8,
    Parse = 9,
    Io = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcqoSolverKind {
    Exhaustive = 0,
    SimulatedAnnealing = 1,
}

/// QUBO solver selection. Obtain defaults from [`qcqo_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QcqoSolverOptions {
    pub kind: QcqoSolverKind,
    /// Annealing restarts per QUBO.
    pub reads: usize,
    /// Annealing sweeps per read.
    pub sweeps: usize,
    /// Largest instance the exhaustive solver accepts.
    pub max_vars: usize,
}

/// Opaque quadratic program `wᵀAw + aᵀw + c`.
pub struct QcqoProgram(QuadraticProgram);

/// Opaque regression dataset.
pub struct QcqoDataset(RegressionDataset);

/// Opaque optimization result: final point plus per-iteration history.
pub struct QcqoTrajectory {
    w: DVector<f64>,
    trajectory: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(err: &Error) -> QcqoStatus {
    match err {
        Error::DimensionMismatch { .. } => QcqoStatus::DimensionMismatch,
        Error::NotSquare { .. } => QcqoStatus::NotSquare,
        Error::NonBinary { .. } => QcqoStatus::NonBinary,
        Error::TooLarge { .. } => QcqoStatus::TooLarge,
        Error::InvalidParameter(_) => QcqoStatus::InvalidParameter,
        Error::Singular => QcqoStatus::Singular,
        Error::NotConvex { .. } => QcqoStatus::NotConvex,
        Error::Parse(_) | Error::Json(_) => QcqoStatus::Parse,
        Error::Io(_) => QcqoStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type FfiResult = std::result::Result<(), Failure>;

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> FfiResult) -> QcqoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QcqoStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer passed as `{name}`"));
            QcqoStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            QcqoStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &'static str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Null(name))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> FfiResult {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(Failure::Null("path"));
    }
    let text = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Error::InvalidParameter("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(text))
}

fn check_len(expected: usize, found: usize) -> FfiResult {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found }.into())
    }
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qcqo_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

#[no_mangle]
pub extern "C" fn qcqo_solver_options_default() -> QcqoSolverOptions {
    let defaults = SolverConfig::exhaustive();
    QcqoSolverOptions {
        kind: QcqoSolverKind::Exhaustive,
        reads: defaults.reads,
        sweeps: defaults.sweeps,
        max_vars: DEFAULT_EXHAUSTIVE_CAP,
    }
}

fn solver_config(opts: &QcqoSolverOptions) -> SolverConfig {
    SolverConfig {
        kind: match opts.kind {
            QcqoSolverKind::Exhaustive => SolverKind::Exhaustive,
            QcqoSolverKind::SimulatedAnnealing => SolverKind::Sa,
        },
        reads: opts.reads,
        sweeps: opts.sweeps,
        temperatures: None,
        max_vars: opts.max_vars,
    }
}

/// Creates the program `wᵀAw + aᵀw + c` from a row-major `d×d` matrix `a_mat`
/// (symmetrized on input) and a length-`d` vector `a_vec`.
///
/// # Safety
/// `a_mat` must point to `d*d` doubles, `a_vec` to `d` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_program_new(
    d: usize,
    a_mat: *const f64,
    a_vec: *const f64,
    c: f64,
    out: *mut *mut QcqoProgram,
) -> QcqoStatus {
    guard(|| {
        let entries = slice(a_mat, d * d, "a_mat")?;
        let linear = slice(a_vec, d, "a_vec")?;
        let qp = QuadraticProgram::new(
            DMatrix::from_row_slice(d, d, entries),
            DVector::from_column_slice(linear),
            c,
        )?;
        store(out, QcqoProgram(qp))
    })
}

/// # Safety
/// `program` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcqo_program_free(program: *mut QcqoProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Dimension `d`, or 0 for a NULL handle.
///
/// # Safety
/// `program` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qcqo_program_dim(program: *const QcqoProgram) -> usize {
    program.as_ref().map_or(0, |p| p.0.dim())
}

/// # Safety
/// `w` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_program_loss(
    program: *const QcqoProgram,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> QcqoStatus {
    guard(|| {
        let p = handle(program, "program")?;
        let w = DVector::from_column_slice(slice(w, len, "w")?);
        let out = out.as_mut().ok_or(Failure::Null("out"))?;
        *out = p.0.loss(&w)?;
        Ok(())
    })
}

/// Writes the gradient `2Aw + a` into `out` (length `len`).
///
/// # Safety
/// `w` and `out` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qcqo_program_gradient(
    program: *const QcqoProgram,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> QcqoStatus {
    guard(|| {
        let p = handle(program, "program")?;
        let w = DVector::from_column_slice(slice(w, len, "w")?);
        let g = p.0.gradient(&w)?;
        slice_mut(out, len, "out")?.copy_from_slice(g.as_slice());
        Ok(())
    })
}

/// Synthetic noise-free regression data: `samples` rows, `d` columns with the
/// last fixed to 1, true weights rescaled to norm `target_norm`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_generate(
    d: usize,
    samples: usize,
    target_norm: f64,
    seed: u64,
    out: *mut *mut QcqoDataset,
) -> QcqoStatus {
    guard(|| store(out, QcqoDataset(generate_synthetic(d, samples, target_norm, seed)?)))
}

/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_read_csv(path: *const c_char, out: *mut *mut QcqoDataset) -> QcqoStatus {
    guard(|| store(out, QcqoDataset(read_dataset(&path_arg(path)?)?)))
}

/// # Safety
/// `dataset` must be live and `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_write_csv(dataset: *const QcqoDataset, path: *const c_char) -> QcqoStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        write_dataset(&ds.0, &path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_free(dataset: *mut QcqoDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `dataset` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_dim(dataset: *const QcqoDataset) -> usize {
    dataset.as_ref().map_or(0, |ds| ds.0.dim())
}

/// # Safety
/// `dataset` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_num_samples(dataset: *const QcqoDataset) -> usize {
    dataset.as_ref().map_or(0, |ds| ds.0.num_samples())
}

/// Mean squared error of weights `w`.
///
/// # Safety
/// `w` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_mse(
    dataset: *const QcqoDataset,
    w: *const f64,
    len: usize,
    out: *mut f64,
) -> QcqoStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let w = DVector::from_column_slice(slice(w, len, "w")?);
        *out.as_mut().ok_or(Failure::Null("out"))? = ds.0.mse(&w)?;
        Ok(())
    })
}

/// Least-squares weights from the normal equations.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_closed_form(dataset: *const QcqoDataset, out: *mut f64, len: usize) -> QcqoStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        check_len(ds.0.dim(), len)?;
        let w = ds.0.closed_form_optimum()?;
        slice_mut(out, len, "out")?.copy_from_slice(w.as_slice());
        Ok(())
    })
}

/// The MSE of the dataset as a quadratic program.
///
/// # Safety
/// `dataset` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_dataset_to_program(dataset: *const QcqoDataset, out: *mut *mut QcqoProgram) -> QcqoStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        store(out, QcqoProgram(ds.0.to_quadratic_program()))
    })
}

#[allow(clippy::too_many_arguments)]
unsafe fn run(
    program: *const QcqoProgram,
    w0: *const f64,
    len: usize,
    schedule: StepSchedule,
    n: usize,
    options: *const QcqoSolverOptions,
    iterations: usize,
    seed: u64,
    out: *mut *mut QcqoTrajectory,
) -> QcqoStatus {
    guard(|| {
        let p = handle(program, "program")?;
        let w0 = DVector::from_column_slice(slice(w0, len, "w0")?);
        let opts = options.as_ref().copied().unwrap_or_else(|| qcqo_solver_options_default());
        let solver = solver_config(&opts).build()?;
        let stop = StoppingRule::iterations(iterations);
        let (w, trajectory) = optimize(&p.0, &w0, n, schedule, &solver, &stop, seed, None)?;
        store(out, QcqoTrajectory { w, trajectory })
    })
}

/// Runs `iterations` steps with fixed step variance `sigma` and `n` QUBO
/// variables per step. `options` may be NULL for the exhaustive solver.
///
/// # Safety
/// `w0` must point to `len` doubles; `options` NULL or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_optimize_fixed(
    program: *const QcqoProgram,
    w0: *const f64,
    len: usize,
    sigma: f64,
    n: usize,
    options: *const QcqoSolverOptions,
    iterations: usize,
    seed: u64,
    out: *mut *mut QcqoTrajectory,
) -> QcqoStatus {
    run(program, w0, len, StepSchedule::Fixed { sigma }, n, options, iterations, seed, out)
}

/// Runs `iterations` steps with the step variance adapted over the last
/// `window` step lengths.
///
/// # Safety
/// Same contract as [`qcqo_optimize_fixed`].
#[no_mangle]
pub unsafe extern "C" fn qcqo_optimize_adaptive(
    program: *const QcqoProgram,
    w0: *const f64,
    len: usize,
    window: usize,
    n: usize,
    options: *const QcqoSolverOptions,
    iterations: usize,
    seed: u64,
    out: *mut *mut QcqoTrajectory,
) -> QcqoStatus {
    run(program, w0, len, StepSchedule::Window { len: window }, n, options, iterations, seed, out)
}

/// # Safety
/// `trajectory` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qcqo_trajectory_free(trajectory: *mut QcqoTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Number of recorded iterations (excluding the initial point).
///
/// # Safety
/// `trajectory` must be NULL or live.
#[no_mangle]
pub unsafe extern "C" fn qcqo_trajectory_len(trajectory: *const QcqoTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.trajectory.records.len())
}

/// Copies the loss at `t = 0, 1, …, len` into `out`, which must hold
/// `qcqo_trajectory_len + 1` values.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qcqo_trajectory_losses(trajectory: *const QcqoTrajectory, out: *mut f64, len: usize) -> QcqoStatus {
    guard(|| {
        let t = &handle(trajectory, "trajectory")?.trajectory;
        check_len(t.records.len() + 1, len)?;
        for (dst, loss) in slice_mut(out, len, "out")?.iter_mut().zip(t.losses()) {
            *dst = loss;
        }
        Ok(())
    })
}

/// Copies the step variance used at each iteration `1..=len` into `out`.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qcqo_trajectory_sigmas(trajectory: *const QcqoTrajectory, out: *mut f64, len: usize) -> QcqoStatus {
    guard(|| {
        let t = &handle(trajectory, "trajectory")?.trajectory;
        check_len(t.records.len(), len)?;
        for (dst, r) in slice_mut(out, len, "out")?.iter_mut().zip(&t.records) {
            *dst = r.sigma;
        }
        Ok(())
    })
}

/// Copies the final point into `out` (length `d`).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qcqo_trajectory_final_point(
    trajectory: *const QcqoTrajectory,
    out: *mut f64,
    len: usize,
) -> QcqoStatus {
    guard(|| {
        let t = handle(trajectory, "trajectory")?;
        check_len(t.w.len(), len)?;
        slice_mut(out, len, "out")?.copy_from_slice(t.w.as_slice());
        Ok(())
    })
}

/// Minimizes `zᵀQz` over `z ∈ {0,1}ⁿ` for a row-major `n×n` matrix `q`.
/// Writes the minimizer to `z_out` and its energy to `energy_out`.
///
/// # Safety
/// `q` must point to `n*n` doubles, `z_out` to `n` writable bytes, `energy_out` writable.
#[no_mangle]
pub unsafe extern "C" fn qcqo_qubo_solve(
    n: usize,
    q: *const f64,
    options: *const QcqoSolverOptions,
    seed: u64,
    z_out: *mut u8,
    energy_out: *mut f64,
) -> QcqoStatus {
    guard(|| {
        let instance = QuboInstance::from_row_major(n, slice(q, n * n, "q")?)?;
        let opts = options.as_ref().copied().unwrap_or_else(|| qcqo_solver_options_default());
        let result = solver_config(&opts).build()?.solve(&instance, seed)?;
        slice_mut(z_out, n, "z_out")?.copy_from_slice(&result.z);
        *energy_out.as_mut().ok_or(Failure::Null("energy_out"))? = result.energy;
        Ok(())
    })
}
