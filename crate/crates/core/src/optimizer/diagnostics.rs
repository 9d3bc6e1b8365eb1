//! Per-iteration report of the convex convergence bound.
//!
//! Writing each applied step as `u_t = −‖A‖₂·g_t + ε_t`, the bound reads
//! `L(w_t) − L(w*) ≤ ‖A‖₂·D/(2t) + (1/t)·Σ_{t'≤t} ε_{t'}ᵀu_{t'}` with
//! `D = ‖w₀ − w*‖₂`. Two choices of `g_t` are reported: the gradient
//! `2Aw + a`, and `Aw + a`. The distance term is reported both plain and
//! squared. Nothing here asserts that the bound holds.

use nalgebra::DVector;

use super::Trajectory;
use crate::error::{check_dim, Error, Result};
use crate::quad_model::QuadraticProgram;

const CONVEXITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    /// Iteration index (1-based); the row describes the step into `w_t`.
    pub t: usize,
    /// `L(w_t) − L(w*)`.
    pub gap: f64,
    /// `‖ε_t‖₂` with `g = 2Aw + a`.
    pub residual_norm: f64,
    /// `ε_tᵀu_t` with `g = 2Aw + a`.
    pub correction: f64,
    /// `ε_tᵀu_t` with `g = Aw + a`.
    pub correction_half: f64,
    /// Bound with `g = 2Aw + a` and unsquared distance.
    pub bound: f64,
    /// Bound with `g = 2Aw + a` and squared distance.
    pub bound_squared: f64,
    /// Bound with `g = Aw + a` and unsquared distance.
    pub bound_half: f64,
    /// Bound with `g = Aw + a` and squared distance.
    pub bound_half_squared: f64,
}

/// Computes the report for a convex program; refuses indefinite `A`.
pub fn convergence_diagnostics(
    qp: &QuadraticProgram,
    trajectory: &Trajectory,
    w_star: &DVector<f64>,
) -> Result<Vec<DiagnosticRow>> {
    check_dim(qp.dim(), w_star.len())?;
    check_dim(qp.dim(), trajectory.w0.len())?;
    let min_eigenvalue = qp.min_eigenvalue();
    if min_eigenvalue < -CONVEXITY_TOL {
        return Err(Error::NotConvex { min_eigenvalue });
    }

    let lipschitz = qp.spectral_norm();
    let optimum = qp.loss_unchecked(w_star);
    let dist0 = (&trajectory.w0 - w_star).norm();
    let a = qp.curvature();
    let linear = qp.linear();

    let mut rows = Vec::with_capacity(trajectory.records.len());
    let (mut sum, mut sum_half) = (0.0, 0.0);
    let mut w = trajectory.w0.clone();
    for record in &trajectory.records {
        let u = &record.step;
        let aw = a * &w;
        let eps = u + (&aw * 2.0 + linear) * lipschitz;
        let eps_half = u + (&aw + linear) * lipschitz;
        let correction = eps.dot(u);
        let correction_half = eps_half.dot(u);
        sum += correction;
        sum_half += correction_half;

        w += u;
        let t = record.t as f64;
        rows.push(DiagnosticRow {
            t: record.t,
            gap: qp.loss_unchecked(&w) - optimum,
            residual_norm: eps.norm(),
            correction,
            correction_half,
            bound: lipschitz * dist0 / (2.0 * t) + sum / t,
            bound_squared: lipschitz * dist0 * dist0 / (2.0 * t) + sum / t,
            bound_half: lipschitz * dist0 / (2.0 * t) + sum_half / t,
            bound_half_squared: lipschitz * dist0 * dist0 / (2.0 * t) + sum_half / t,
        });
    }
    Ok(rows)
}
