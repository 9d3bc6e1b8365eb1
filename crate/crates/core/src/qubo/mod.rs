//! QUBO instances, energy evaluation and the solver backends.
//!
//! An instance stores a dense symmetric weight matrix `Q` and evaluates
//! `E_Q(z) = zᵀQz` for binary `z`. Two solvers implement [`QuboSolver`]:
//! [`Exhaustive`] (exact, Gray-code enumeration) and [`SimulatedAnnealing`]
//! (inexact, a classical stand-in for an annealing device).

mod anneal;
mod dump;
mod exhaustive;

pub use anneal::{SaParams, SimulatedAnnealing};
pub use dump::{read_dump, write_dump};
pub use exhaustive::{Exhaustive, DEFAULT_EXHAUSTIVE_CAP};

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};

/// Dense symmetric QUBO weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    n: usize,
    // row-major, always symmetric
    q: Vec<f64>,
}

impl QuboInstance {
    /// Builds an instance from any square matrix, symmetrizing it.
    pub fn new(q: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = q.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::InvalidParameter("QUBO needs at least one variable".into()));
        }
        let n = rows;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = 0.5 * (q[(i, j)] + q[(j, i)]);
            }
        }
        Ok(Self { n, q: data })
    }

    /// Builds an instance from row-major entries, symmetrizing them.
    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        Self::new(&DMatrix::from_row_slice(n, n, entries))
    }

    /// Caller guarantees `data` is an exactly symmetric row-major `n×n` matrix.
    pub(crate) fn from_symmetric_unchecked(n: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, q: data }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.n..(i + 1) * self.n]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.q)
    }

    /// Largest absolute entry and smallest nonzero absolute entry.
    pub(crate) fn abs_range(&self) -> Option<(f64, f64)> {
        let mut max = 0.0f64;
        let mut min = f64::INFINITY;
        for &v in &self.q {
            let a = v.abs();
            if a > 0.0 {
                max = max.max(a);
                min = min.min(a);
            }
        }
        (max > 0.0).then_some((max, min))
    }

    /// `E_Q(z) = zᵀQz`.
    pub fn energy(&self, z: &[u8]) -> Result<f64> {
        check_dim(self.n, z.len())?;
        if let Some((index, &v)) = z.iter().enumerate().find(|(_, &v)| v > 1) {
            return Err(Error::NonBinary { index, value: v as f64 });
        }
        Ok(self.energy_unchecked(z))
    }

    pub(crate) fn energy_unchecked(&self, z: &[u8]) -> f64 {
        let mut e = 0.0;
        for i in (0..self.n).filter(|&i| z[i] == 1) {
            let row = self.row(i);
            e += row[i];
            for j in (i + 1..self.n).filter(|&j| z[j] == 1) {
                e += 2.0 * row[j];
            }
        }
        e
    }
}

/// Outcome of a single QUBO solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub z: Vec<u8>,
    pub energy: f64,
    pub solver_id: &'static str,
    /// Energy evaluations (exhaustive) or flip proposals (annealing).
    pub num_evaluations: u64,
}

impl SolveResult {
    /// Recomputes the energy of `z` on `instance` so the stored value is exact.
    pub(crate) fn finish(
        instance: &QuboInstance,
        z: Vec<u8>,
        solver_id: &'static str,
        num_evaluations: u64,
    ) -> Self {
        let energy = instance.energy_unchecked(&z);
        Self { z, energy, solver_id, num_evaluations }
    }
}

/// Pluggable solver contract: instance in, best candidate out.
///
/// Implementations must be deterministic in `(instance, self, seed)`.
pub trait QuboSolver: Send + Sync {
    fn solve(&self, instance: &QuboInstance, seed: u64) -> Result<SolveResult>;

    fn id(&self) -> &'static str;
}

/// Closed set of built-in backends, convenient for configs and FFI.
#[derive(Debug, Clone, PartialEq)]
pub enum Solver {
    Exhaustive(Exhaustive),
    Annealing(SimulatedAnnealing),
}

impl QuboSolver for Solver {
    fn solve(&self, instance: &QuboInstance, seed: u64) -> Result<SolveResult> {
        match self {
            Solver::Exhaustive(s) => s.solve(instance, seed),
            Solver::Annealing(s) => s.solve(instance, seed),
        }
    }

    fn id(&self) -> &'static str {
        match self {
            Solver::Exhaustive(s) => s.id(),
            Solver::Annealing(s) => s.id(),
        }
    }
}

/// Decodes `z` from an integer code, bit `i` holding `z_i`.
pub(crate) fn bits_from_code(code: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((code >> i) & 1) as u8).collect()
}
