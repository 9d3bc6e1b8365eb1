//! Continuous quadratic optimization by sequences of QUBO instances.
//!
//! A quadratic loss `L(w) = wᵀAw + aᵀw + c` is minimized by repeatedly
//! sampling an `n×d` matrix `R`, building the `n`-variable QUBO whose
//! energy is exactly `L(w + Rᵀz) − L(w)`, solving it, and moving to
//! `w + Rᵀz*`. The loop is an anytime algorithm: the loss never increases.

pub mod error;
pub mod experiment;
pub mod fmt;
pub mod linreg;
pub mod optimizer;
pub mod quad_model;
pub mod qubo;
pub mod sampling;

pub use error::{Error, Result};
