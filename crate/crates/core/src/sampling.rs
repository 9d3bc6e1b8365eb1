//! Row-wise Gaussian sampling of update matrices `R ∈ ℝ^{n×d}`.
//!
//! Every row is drawn i.i.d. from `N(μ, ς·I_d)`. Averaged uniformly over
//! `z ∈ {0,1}ⁿ`, the update step `Rᵀz` equals `½·1ᵀR`, which is distributed
//! as `N(n/2·μ, n/4·ς·I_d)`; [`RowSampler::expected_step_moments`] returns
//! that law in closed form.
//!
//! Draws use ChaCha8 seeded from a `u64` through `SeedableRng::seed_from_u64`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RowSampler {
    n: usize,
    mean: DVector<f64>,
    row_variance: f64,
}

impl RowSampler {
    pub fn new(n: usize, mean: DVector<f64>, row_variance: f64) -> Result<Self> {
        if n == 0 || mean.is_empty() {
            return Err(Error::InvalidParameter("sampler needs n >= 1 and d >= 1".into()));
        }
        if !(row_variance > 0.0 && row_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "row variance must be positive and finite, got {row_variance}"
            )));
        }
        Ok(Self { n, mean, row_variance })
    }

    /// Zero-mean sampler whose z-averaged step has covariance `sigma·I_d`:
    /// rows are drawn from `N(0, (4σ/n)·I_d)`.
    pub fn for_target_step(sigma: f64, n: usize, d: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("sampler needs n >= 1".into()));
        }
        Self::new(n, DVector::zeros(d), 4.0 * sigma / n as f64)
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn row_variance(&self) -> f64 {
        self.row_variance
    }

    pub fn sample(&self, seed: u64) -> UpdateMatrix {
        self.sample_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Fills `R` row by row from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> UpdateMatrix {
        let d = self.dim();
        let std_dev = self.row_variance.sqrt();
        let mut entries = Vec::with_capacity(self.n * d);
        for _ in 0..self.n {
            for j in 0..d {
                let x: f64 = StandardNormal.sample(rng);
                entries.push(self.mean[j] + std_dev * x);
            }
        }
        UpdateMatrix(DMatrix::from_row_slice(self.n, d, &entries))
    }

    /// Mean `n/2·μ` and covariance `n/4·ς·I_d` of the z-averaged step.
    pub fn expected_step_moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n as f64;
        let d = self.dim();
        (&self.mean * (n / 2.0), DMatrix::identity(d, d) * (n / 4.0 * self.row_variance))
    }
}

/// An `n×d` update matrix; row subsets selected by `z` sum to the step `Rᵀz`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateMatrix(pub DMatrix<f64>);

impl UpdateMatrix {
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `Rᵀz`: the sum of the rows selected by `z`.
    pub fn step(&self, z: &[u8]) -> Result<DVector<f64>> {
        check_dim(self.rows(), z.len())?;
        let mut u = DVector::zeros(self.dim());
        for (i, _) in z.iter().enumerate().filter(|(_, &b)| b == 1) {
            u += self.0.row(i).transpose();
        }
        Ok(u)
    }

    /// `½·1ᵀR`, the step averaged uniformly over all `z`.
    pub fn z_average(&self) -> DVector<f64> {
        self.0.row_sum().transpose() * 0.5
    }
}
