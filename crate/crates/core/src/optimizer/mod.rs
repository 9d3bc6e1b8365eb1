//! The QCQO loop: QUBO construction, guarded updates and step-size control.
//!
//! Each iteration samples `R`, builds the QUBO whose energy equals the loss
//! change `L(w + Rᵀz) − L(w)`, solves it and applies `w ← w + Rᵀz*`. The
//! step is rejected (replaced by `z = 0`) whenever the solver reports a
//! positive energy or the recomputed loss would increase, so the loss
//! sequence is non-increasing for every solver.
//!
//! `σ` always denotes the variance of the target step law `N(0, σ·I_d)`;
//! rows of `R` are drawn from `N(0, (4σ/n)·I_d)`.

mod diagnostics;

pub use diagnostics::{convergence_diagnostics, DiagnosticRow};

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::quad_model::QuadraticProgram;
use crate::qubo::{QuboInstance, QuboSolver};
use crate::sampling::{RowSampler, UpdateMatrix};

/// Floor for `σ_t` when every step in the window was rejected.
pub const SIGMA_MIN: f64 = 1e-12;

/// Builds `Q(w, R) = sym(RARᵀ) + diag[R(2Aw + a)]`.
///
/// For every binary `z`, `E_Q(z) = L(w + Rᵀz) − L(w)`.
pub fn build_qubo(qp: &QuadraticProgram, w: &DVector<f64>, r: &UpdateMatrix) -> Result<QuboInstance> {
    check_dim(qp.dim(), w.len())?;
    check_dim(qp.dim(), r.dim())?;
    let r = r.as_matrix();
    let n = r.nrows();
    let quadratic: DMatrix<f64> = r * (qp.curvature() * r.transpose());
    let linear = r * qp.gradient_unchecked(w);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = 0.5 * (quadratic[(i, j)] + quadratic[(j, i)]);
        }
        data[i * n + i] += linear[i];
    }
    Ok(QuboInstance::from_symmetric_unchecked(n, data))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub w: DVector<f64>,
    /// Completed iterations.
    pub t: usize,
    /// Current target step variance.
    pub sigma: f64,
    window: VecDeque<f64>,
    window_len: usize,
}

impl OptimizerState {
    pub fn new(w: DVector<f64>, sigma: f64, window_len: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if window_len == 0 {
            return Err(Error::InvalidParameter("window length must be at least 1".into()));
        }
        Ok(Self { w, t: 0, sigma, window: VecDeque::with_capacity(window_len), window_len })
    }

    /// The last (at most `window_len`) step norms, oldest first.
    pub fn step_window(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    fn push_step_norm(&mut self, norm: f64) {
        if self.window.len() == self.window_len {
            self.window.pop_front();
        }
        self.window.push_back(norm);
    }

    /// `(1/T)·Σ‖u_{t−τ}‖₂` over a full window, floored at [`SIGMA_MIN`].
    fn window_average(&self) -> f64 {
        let avg = self.window.iter().sum::<f64>() / self.window_len as f64;
        if avg > 0.0 {
            avg
        } else {
            SIGMA_MIN
        }
    }
}

/// One row of a [`Trajectory`], describing iteration `t` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// `L(w_t)` after the update.
    pub loss: f64,
    /// `σ` used to sample this iteration's `R`.
    pub sigma: f64,
    /// `‖u_t‖₂`; zero when the step was rejected.
    pub step_norm: f64,
    /// Energy reported by the solver, before the guard.
    pub qubo_energy: f64,
    /// Whether the guard replaced the solver output with `z = 0`.
    pub rejected: bool,
    /// Applied update `u_t = w_t − w_{t−1}`.
    pub step: DVector<f64>,
    /// `‖w_t − w*‖₂` when a reference optimum was supplied.
    pub distance: Option<f64>,
}

/// Initial point plus one record per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub w0: DVector<f64>,
    pub initial_loss: f64,
    pub initial_sigma: f64,
    pub initial_distance: Option<f64>,
    pub records: Vec<IterationRecord>,
}

impl Trajectory {
    pub fn final_loss(&self) -> f64 {
        self.records.last().map_or(self.initial_loss, |r| r.loss)
    }

    /// Loss column including the initial point.
    pub fn losses(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_loss).chain(self.records.iter().map(|r| r.loss))
    }

    /// Iterates `w_0, w_1, …` rebuilt from the recorded steps.
    pub fn iterates(&self) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(self.records.len() + 1);
        out.push(self.w0.clone());
        for r in &self.records {
            let next = out.last().expect("non-empty") + &r.step;
            out.push(next);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StoppingRule {
    pub max_iterations: Option<usize>,
    pub loss_threshold: Option<f64>,
    pub max_wall_clock: Option<Duration>,
}

impl StoppingRule {
    pub fn iterations(budget: usize) -> Self {
        Self { max_iterations: Some(budget), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations.is_none() && self.loss_threshold.is_none() && self.max_wall_clock.is_none() {
            return Err(Error::InvalidParameter("stopping rule needs at least one criterion".into()));
        }
        Ok(())
    }

    fn should_stop(&self, iterations: usize, loss: f64, started: Instant) -> bool {
        self.max_iterations.is_some_and(|m| iterations >= m)
            || self.loss_threshold.is_some_and(|l| loss <= l)
            || self.max_wall_clock.is_some_and(|d| started.elapsed() >= d)
    }
}

/// How `σ_t` evolves over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    Fixed { sigma: f64 },
    /// `σ_t = 1` for `t ≤ T`, then the mean norm of the last `T` steps.
    Window { len: usize },
}

/// Performs one guarded iteration from `state`, sampling `R` from `sampler`.
pub fn step(
    qp: &QuadraticProgram,
    state: &OptimizerState,
    sampler: &RowSampler,
    solver: &dyn QuboSolver,
    seed: u64,
) -> Result<(OptimizerState, IterationRecord)> {
    check_dim(qp.dim(), sampler.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = sampler.sample_with(&mut rng);
    step_with(qp, state, &r, solver, rng.next_u64())
}

/// One guarded iteration with a given update matrix.
pub fn step_with(
    qp: &QuadraticProgram,
    state: &OptimizerState,
    r: &UpdateMatrix,
    solver: &dyn QuboSolver,
    solver_seed: u64,
) -> Result<(OptimizerState, IterationRecord)> {
    check_dim(qp.dim(), state.w.len())?;
    let qubo = build_qubo(qp, &state.w, r)?;
    let solved = solver.solve(&qubo, solver_seed)?;

    let loss_before = qp.loss_unchecked(&state.w);
    let mut next = state.clone();
    next.t += 1;

    let mut rejected = solved.energy > 0.0;
    let mut loss = loss_before;
    let mut step = DVector::zeros(qp.dim());
    if !rejected {
        let u = r.step(&solved.z)?;
        let w = &state.w + &u;
        let candidate = qp.loss_unchecked(&w);
        // E_Q(z) <= 0 can still round to a tiny loss increase
        if candidate <= loss_before {
            next.w = w;
            loss = candidate;
            step = u;
        } else {
            rejected = true;
        }
    }
    let step_norm = step.norm();
    next.push_step_norm(step_norm);

    let record = IterationRecord {
        t: next.t,
        loss,
        sigma: state.sigma,
        step_norm,
        qubo_energy: solved.energy,
        rejected,
        step,
        distance: None,
    };
    Ok((next, record))
}

/// Runs the loop with the given schedule until `stop` fires.
///
/// `reference` is an optional known optimum used for the distance column.
#[allow(clippy::too_many_arguments)]
pub fn optimize(
    qp: &QuadraticProgram,
    w0: &DVector<f64>,
    n: usize,
    schedule: StepSchedule,
    solver: &dyn QuboSolver,
    stop: &StoppingRule,
    seed: u64,
    reference: Option<&DVector<f64>>,
) -> Result<(DVector<f64>, Trajectory)> {
    check_dim(qp.dim(), w0.len())?;
    if let Some(w_star) = reference {
        check_dim(qp.dim(), w_star.len())?;
    }
    stop.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let (sigma0, window_len) = match schedule {
        StepSchedule::Fixed { sigma } => (sigma, 1),
        StepSchedule::Window { len } => (1.0, len),
    };
    let mut state = OptimizerState::new(w0.clone(), sigma0, window_len)?;
    let distance = |w: &DVector<f64>| reference.map(|w_star| (w - w_star).norm());

    let mut trajectory = Trajectory {
        w0: w0.clone(),
        initial_loss: qp.loss_unchecked(w0),
        initial_sigma: sigma0,
        initial_distance: distance(w0),
        records: Vec::new(),
    };

    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while !stop.should_stop(state.t, trajectory.final_loss(), started) {
        if let StepSchedule::Window { len } = schedule {
            state.sigma = if state.t > len { state.window_average() } else { 1.0 };
        }
        let sampler = RowSampler::for_target_step(state.sigma, n, qp.dim())?;
        let (next, mut record) = step(qp, &state, &sampler, solver, rng.next_u64())?;
        record.distance = distance(&next.w);
        trajectory.records.push(record);
        state = next;
    }
    Ok((state.w, trajectory))
}

/// Fixed step distribution: rows from `N(0, (4σ/n)·I_d)` every iteration.
#[allow(clippy::too_many_arguments)]
pub fn run_fixed(
    qp: &QuadraticProgram,
    w0: &DVector<f64>,
    sigma: f64,
    n: usize,
    solver: &dyn QuboSolver,
    stop: &StoppingRule,
    seed: u64,
) -> Result<(DVector<f64>, Trajectory)> {
    optimize(qp, w0, n, StepSchedule::Fixed { sigma }, solver, stop, seed, None)
}

/// Window-based step-size adaptation with window length `window`.
pub fn run_adaptive(
    qp: &QuadraticProgram,
    w0: &DVector<f64>,
    n: usize,
    window: usize,
    solver: &dyn QuboSolver,
    stop: &StoppingRule,
    seed: u64,
) -> Result<(DVector<f64>, Trajectory)> {
    optimize(qp, w0, n, StepSchedule::Window { len: window }, solver, stop, seed, None)
}

#[cfg(test)]
mod tests;
