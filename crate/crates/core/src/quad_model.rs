//! Unconstrained quadratic programs `L(w) = wᵀAw + aᵀw + c`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

const POWER_ITERATION_TOL: f64 = 1e-10;
const POWER_ITERATION_MAX_STEPS: usize = 200_000;

/// Returns `(M + Mᵀ)/2`, which has the same quadratic form as `M`.
pub fn symmetrize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Quadratic loss with symmetric curvature matrix.
///
/// Immutable after construction. Any square matrix is accepted and
/// symmetrized, which leaves the loss unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    curvature: DMatrix<f64>,
    linear: DVector<f64>,
    constant: f64,
}

impl QuadraticProgram {
    pub fn new(curvature: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Result<Self> {
        let curvature = symmetrize(&curvature)?;
        let d = curvature.nrows();
        if d == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        check_dim(d, linear.len())?;
        Ok(Self { curvature, linear, constant })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    /// Symmetric `A`.
    pub fn curvature(&self) -> &DMatrix<f64> {
        &self.curvature
    }

    /// Linear term `a`.
    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    /// Constant `c`; it never influences the optimizer.
    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn loss(&self, w: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        Ok(self.loss_unchecked(w))
    }

    pub(crate) fn loss_unchecked(&self, w: &DVector<f64>) -> f64 {
        let aw = &self.curvature * w;
        w.dot(&aw) + self.linear.dot(w) + self.constant
    }

    /// `∇L(w) = 2Aw + a`.
    pub fn gradient(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), w.len())?;
        Ok(self.gradient_unchecked(w))
    }

    pub(crate) fn gradient_unchecked(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.curvature * w * 2.0 + &self.linear
    }

    /// `‖A‖₂` by power iteration on `A`, to relative tolerance `1e-10`.
    ///
    /// For symmetric `A`, `‖Av‖` converges to the largest absolute
    /// eigenvalue even when `±λ` are both extremal.
    pub fn spectral_norm(&self) -> f64 {
        power_iteration_norm(&self.curvature)
    }

    /// Smallest eigenvalue of `A` (dense symmetric eigensolver).
    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.curvature.clone()).eigenvalues.min()
    }

    /// Minimizer `w*` solving `2Aw* = −a`, when `A` is positive definite.
    pub fn stationary_point(&self) -> Result<DVector<f64>> {
        let chol = (self.curvature.clone() * 2.0).cholesky().ok_or(Error::Singular)?;
        Ok(chol.solve(&(-&self.linear)))
    }
}

fn power_iteration_norm(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    if m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_f00d);
    let mut random_unit = || {
        let v = DVector::<f64>::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let norm = v.norm();
        v / norm
    };

    let mut v = random_unit();
    let mut estimate = 0.0;
    for _ in 0..POWER_ITERATION_MAX_STEPS {
        let mv = m * &v;
        let norm = mv.norm();
        if norm == 0.0 {
            // start vector in the null space
            v = random_unit();
            continue;
        }
        v = mv / norm;
        if (norm - estimate).abs() <= POWER_ITERATION_TOL * norm {
            return norm;
        }
        estimate = norm;
    }
    estimate
}
