//! Linear regression as a quadratic program, synthetic data, and the
//! precision-vector encoding used by explicit binary formulations.
//!
//! The bias is fused into the last weight: the last column of `X` is all
//! ones. With `A = XᵀX/N`, `a = −2Xᵀy/N` and `c = yᵀy/N`, the program loss
//! equals the mean squared error for every `w`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::fmt::format_g;
use crate::quad_model::QuadraticProgram;

// eigenvalue ratio of XᵀX below which the design is treated as rank-deficient
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    w_true: Option<DVector<f64>>,
    seed: Option<u64>,
}

impl RegressionDataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, w_true: Option<DVector<f64>>) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("dataset needs at least one row and column".into()));
        }
        check_dim(n, y.len())?;
        if let Some(w) = &w_true {
            check_dim(d, w.len())?;
        }
        if let Some(row) = (0..n).find(|&i| x[(i, d - 1)] != 1.0) {
            return Err(Error::InvalidParameter(format!(
                "row {row}: last feature must be the constant 1 (fused bias)"
            )));
        }
        Ok(Self { x, y, w_true, seed: None })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn w_true(&self) -> Option<&DVector<f64>> {
        self.w_true.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn num_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// `(1/N)·‖Xw − y‖₂²`.
    pub fn mse(&self, w: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), w.len())?;
        let residual = &self.x * w - &self.y;
        Ok(residual.norm_squared() / self.num_samples() as f64)
    }

    pub fn to_quadratic_program(&self) -> QuadraticProgram {
        let n = self.num_samples() as f64;
        let xt = self.x.transpose();
        let a = &xt * &self.x / n;
        let lin = &xt * &self.y * (-2.0 / n);
        let c = self.y.norm_squared() / n;
        QuadraticProgram::new(a, lin, c).expect("Gram matrix is square and consistent")
    }

    /// Least-squares optimum from the normal equations `XᵀXw = Xᵀy`.
    pub fn closed_form_optimum(&self) -> Result<DVector<f64>> {
        let xt = self.x.transpose();
        let gram = &xt * &self.x;
        let eigenvalues = SymmetricEigen::new(gram.clone()).eigenvalues;
        let (lo, hi) = (eigenvalues.min(), eigenvalues.max());
        if !(hi > 0.0) || lo <= RANK_TOL * hi {
            return Err(Error::Singular);
        }
        let chol = gram.cholesky().ok_or(Error::Singular)?;
        Ok(chol.solve(&(&xt * &self.y)))
    }
}

/// Synthetic noiseless data: `w ~ N(0, I)` rescaled to `‖w‖₂ = target_norm`,
/// rows `X_i ~ N(0, d·I)`, last column overwritten with ones, `y = Xw`.
pub fn generate_synthetic(d: usize, samples: usize, target_norm: f64, seed: u64) -> Result<RegressionDataset> {
    generate_synthetic_with_noise(d, samples, target_norm, 0.0, seed)
}

/// As [`generate_synthetic`], adding `N(0, noise_std²)` to every target.
pub fn generate_synthetic_with_noise(
    d: usize,
    samples: usize,
    target_norm: f64,
    noise_std: f64,
    seed: u64,
) -> Result<RegressionDataset> {
    if d < 2 || samples == 0 {
        return Err(Error::InvalidParameter(format!(
            "synthetic data needs d >= 2 and N >= 1, got d={d}, N={samples}"
        )));
    }
    if !(target_norm > 0.0) || !(noise_std >= 0.0) {
        return Err(Error::InvalidParameter("target_norm must be > 0 and noise_std >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let w = DVector::from_fn(d, |_, _| normal());
    let w = &w * (target_norm / w.norm());

    let scale = (d as f64).sqrt();
    let mut x = DMatrix::from_fn(samples, d, |_, _| 0.0);
    for i in 0..samples {
        for j in 0..d {
            x[(i, j)] = scale * normal();
        }
    }
    x.column_mut(d - 1).fill(1.0);

    let mut y = &x * &w;
    if noise_std > 0.0 {
        y.iter_mut().for_each(|v| *v += noise_std * normal());
    }
    let mut ds = RegressionDataset::new(x, y, Some(w))?;
    ds.seed = Some(seed);
    Ok(ds)
}

/// Path of the metadata sidecar written next to a dataset CSV.
pub fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

/// Writes `x1,…,xd,y` rows and, when known, a `.meta` sidecar.
pub fn write_dataset(ds: &RegressionDataset, csv: &Path) -> Result<()> {
    let d = ds.dim();
    let mut out = BufWriter::new(File::create(csv)?);
    let header: Vec<String> = (1..=d).map(|j| format!("x{j}")).chain(["y".to_string()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..ds.num_samples() {
        let row: Vec<String> = ds
            .x
            .row(i)
            .iter()
            .chain(std::iter::once(&ds.y[i]))
            .map(|&v| format_g(v, 17))
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;

    let mut meta = BufWriter::new(File::create(meta_path(csv))?);
    writeln!(meta, "d = {d}")?;
    writeln!(meta, "N = {}", ds.num_samples())?;
    if let Some(seed) = ds.seed {
        writeln!(meta, "seed = {seed}")?;
    }
    if let Some(w) = &ds.w_true {
        let values: Vec<String> = w.iter().map(|&v| format_g(v, 17)).collect();
        writeln!(meta, "w_true = {}", values.join(","))?;
    }
    meta.flush()?;
    Ok(())
}

/// Reads a dataset CSV; the `.meta` sidecar is optional.
pub fn read_dataset(csv: &Path) -> Result<RegressionDataset> {
    let reader = BufReader::new(File::open(csv)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))??;
    let columns = header.split(',').count();
    if columns < 2 || header.split(',').next_back() != Some("y") {
        return Err(Error::Parse(format!("unexpected dataset header {header:?}")));
    }
    let d = columns - 1;
    let mut values = Vec::new();
    let mut targets = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        check_dim(columns, row.len())?;
        values.extend_from_slice(&row[..d]);
        targets.push(row[d]);
    }
    let x = DMatrix::from_row_slice(targets.len(), d, &values);
    let y = DVector::from_vec(targets);

    let meta = meta_path(csv);
    let (w_true, seed) = if meta.exists() { read_meta(&meta, d)? } else { (None, None) };
    let mut ds = RegressionDataset::new(x, y, w_true)?;
    ds.seed = seed;
    Ok(ds)
}

fn read_meta(path: &Path, d: usize) -> Result<(Option<DVector<f64>>, Option<u64>)> {
    let reader = BufReader::new(File::open(path)?);
    let (mut w_true, mut seed) = (None, None);
    for line in reader.lines() {
        let line = line?;
        let Some((key, value)) = line.split_once('=') else { continue };
        let value = value.trim();
        let bad = |what: &str| Error::Parse(format!("metadata {what}: {value:?}"));
        match key.trim() {
            "d" => {
                let meta_d: usize = value.parse().map_err(|_| bad("d"))?;
                check_dim(d, meta_d)?;
            }
            "seed" => seed = Some(value.parse().map_err(|_| bad("seed"))?),
            "w_true" => {
                let w: Vec<f64> = value
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("w_true"))?;
                w_true = Some(DVector::from_vec(w));
            }
            _ => {}
        }
    }
    Ok((w_true, seed))
}

/// Precision vector `p_i = 2^{i−1}/(2^k − 1)`, `i = 1..k`.
///
/// `pᵀz` covers `[0, 1]` with uniform spacing `1/(2^k − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEncoding {
    pub k: u32,
    pub p: Vec<f64>,
}

impl PrecisionEncoding {
    pub fn new(k: u32) -> Result<Self> {
        if !(1..=52).contains(&k) {
            return Err(Error::InvalidParameter(format!("bits per value must be in 1..=52, got {k}")));
        }
        let denom = ((1u64 << k) - 1) as f64;
        let p = (0..k).map(|i| (1u64 << i) as f64 / denom).collect();
        Ok(Self { k, p })
    }

    pub fn spacing(&self) -> f64 {
        1.0 / ((1u64 << self.k) - 1) as f64
    }

    /// `pᵀz` for `z` read from `code`, bit `i` holding `z_{i+1}`.
    pub fn decode(&self, code: u64) -> f64 {
        self.p.iter().enumerate().filter(|(i, _)| (code >> i) & 1 == 1).map(|(_, v)| v).sum()
    }

    /// All representable values in increasing order.
    pub fn values(&self) -> Vec<f64> {
        (0..(1u64 << self.k)).map(|c| self.decode(c)).collect()
    }
}

/// Smallest `k` with `k ≥ ⌈log₂(1/(2ε) + 1)⌉`.
///
/// Evaluated as the least `k` with `2^k ≥ 1/(2ε) + 1` (relative slack
/// `1e-12`) so that exact powers of two are not pushed up by rounding.
pub fn min_bits(epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let needed = (1.0 / (2.0 * epsilon) + 1.0) * (1.0 - 1e-12);
    let mut k = 0u32;
    while 2f64.powi(k as i32) < needed {
        k += 1;
    }
    Ok(k.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};
    use rand::Rng;

    fn random_dataset(n: usize, d: usize, rng: &mut impl Rng) -> RegressionDataset {
        let mut x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-2.0..2.0));
        x.column_mut(d - 1).fill(1.0);
        let y = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        RegressionDataset::new(x, y, None).unwrap()
    }

    /// Largest distance from any grid point in `[0,1]` (step 1e-4) to the
    /// nearest representable value, found by scanning sorted values.
    fn cover_distance(enc: &PrecisionEncoding) -> f64 {
        let mut values = enc.values();
        values.sort_by(f64::total_cmp);
        let mut worst = 0.0f64;
        let mut idx = 0;
        for step in 0..=10_000 {
            let x = step as f64 * 1e-4;
            while idx + 1 < values.len() && values[idx + 1] <= x {
                idx += 1;
            }
            let mut best = (x - values[idx]).abs();
            if idx + 1 < values.len() {
                best = best.min((values[idx + 1] - x).abs());
            }
            worst = worst.max(best);
        }
        worst
    }

    #[test]
    fn mse_examples() {
        let ds = RegressionDataset::new(dmatrix![1.0, 1.0; 2.0, 1.0], dvector![1.0, 2.0], None).unwrap();
        assert_eq!(ds.mse(&dvector![1.0, 0.0]).unwrap(), 0.0);
        let ds = RegressionDataset::new(dmatrix![3.0, 1.0; 2.0, 1.0], dvector![0.0, 0.0], None).unwrap();
        assert_eq!(ds.mse(&dvector![0.0, 0.0]).unwrap(), 0.0);
        assert!(ds.mse(&dvector![0.0]).is_err());
    }

    #[test]
    fn constructor_requires_bias_column() {
        assert!(RegressionDataset::new(dmatrix![1.0, 2.0], dvector![1.0], None).is_err());
        assert!(RegressionDataset::new(dmatrix![1.0, 1.0], dvector![1.0, 2.0], None).is_err());
    }

    #[test]
    fn program_loss_equals_mse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = random_dataset(50, 4, &mut rng);
        let qp = ds.to_quadratic_program();
        for _ in 0..100 {
            let w = DVector::from_fn(4, |_, _| rng.random_range(-10.0..10.0));
            let mse = ds.mse(&w).unwrap();
            assert!((qp.loss(&w).unwrap() - mse).abs() <= 1e-9 * (1.0 + mse));
        }
        assert!(qp.min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn zero_targets_give_zero_linear_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ds = random_dataset(10, 3, &mut rng);
        let ds = RegressionDataset::new(ds.x().clone(), DVector::zeros(10), None).unwrap();
        let qp = ds.to_quadratic_program();
        assert_eq!(qp.linear(), &DVector::zeros(3));
        assert_eq!(qp.constant(), 0.0);
    }

    #[test]
    fn synthetic_data_has_exact_norm_and_zero_error() {
        let ds = generate_synthetic(16, 1000, 100.0, 7).unwrap();
        let w = ds.w_true().unwrap();
        assert!((w.norm() - 100.0).abs() <= 1e-12);
        assert_eq!(ds.mse(w).unwrap(), 0.0);
        assert!(ds.x().column(15).iter().all(|&v| v == 1.0));
        assert_eq!(generate_synthetic(16, 1000, 100.0, 7).unwrap(), ds);
    }

    #[test]
    fn synthetic_initial_error_scale() {
        let ds = generate_synthetic(16, 100_000, 100.0, 0).unwrap();
        let mse0 = ds.mse(&DVector::zeros(16)).unwrap();
        assert!((1e5..=3e5).contains(&mse0), "{mse0}");
    }

    #[test]
    fn synthetic_rejects_bad_sizes() {
        assert!(generate_synthetic(1, 10, 1.0, 0).is_err());
        assert!(generate_synthetic(3, 0, 1.0, 0).is_err());
        assert!(generate_synthetic(3, 10, 0.0, 0).is_err());
    }

    #[test]
    fn closed_form_recovers_ground_truth() {
        let ds = generate_synthetic(8, 200, 100.0, 3).unwrap();
        let w = ds.closed_form_optimum().unwrap();
        let truth = ds.w_true().unwrap();
        assert!((&w - truth).norm() <= 1e-8 * truth.norm());
        let qp = ds.to_quadratic_program();
        assert!(qp.gradient(&w).unwrap().norm() <= 1e-6 * qp.linear().norm());
    }

    #[test]
    fn closed_form_hand_example() {
        let ds = RegressionDataset::new(dmatrix![1.0, 1.0; 2.0, 1.0; 3.0, 1.0], dvector![2.0, 4.0, 6.0], None).unwrap();
        let w = ds.closed_form_optimum().unwrap();
        assert!((w - dvector![2.0, 0.0]).norm() < 1e-12);
    }

    #[test]
    fn closed_form_is_optimal_against_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ds = random_dataset(40, 3, &mut rng);
        let w_star = ds.closed_form_optimum().unwrap();
        let best = ds.mse(&w_star).unwrap();
        for _ in 0..1000 {
            let w = &w_star + DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            assert!(ds.mse(&w).unwrap() >= best);
        }
    }

    #[test]
    fn closed_form_rejects_rank_deficiency() {
        // duplicated feature column
        let x = dmatrix![1.0, 1.0, 1.0; 2.0, 2.0, 1.0; 3.0, 3.0, 1.0; 4.0, 4.0, 1.0];
        let ds = RegressionDataset::new(x, dvector![1.0, 2.0, 3.0, 4.0], None).unwrap();
        assert!(matches!(ds.closed_form_optimum(), Err(Error::Singular)));
        // fewer samples than features
        let ds = RegressionDataset::new(dmatrix![1.0, 2.0, 1.0], dvector![1.0], None).unwrap();
        assert!(matches!(ds.closed_form_optimum(), Err(Error::Singular)));
    }

    #[test]
    fn precision_vector_examples() {
        let enc = PrecisionEncoding::new(1).unwrap();
        assert_eq!(enc.p, vec![1.0]);
        assert_eq!(enc.values(), vec![0.0, 1.0]);

        let enc = PrecisionEncoding::new(3).unwrap();
        assert_eq!(enc.p, vec![1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]);
        let values = enc.values();
        for (i, v) in values.iter().enumerate() {
            assert!((v - i as f64 / 7.0).abs() < 1e-15);
        }
        assert!(PrecisionEncoding::new(0).is_err());
    }

    #[test]
    fn endpoints_are_exact() {
        for k in 1..=20 {
            let enc = PrecisionEncoding::new(k).unwrap();
            assert_eq!(enc.decode(0), 0.0);
            assert!((enc.decode((1u64 << k) - 1) - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn min_bits_examples() {
        assert_eq!(min_bits(0.25).unwrap(), 2);
        assert_eq!(min_bits(0.5).unwrap(), 1);
        assert_eq!(min_bits(1.0 / 510.0).unwrap(), 8);
        assert!(min_bits(0.0).is_err());
    }

    #[test]
    fn min_bits_covers_unit_interval() {
        for eps in [0.25, 0.1, 0.05, 0.01, 0.005, 0.001] {
            let k = min_bits(eps).unwrap();
            assert!(k <= 12);
            let enc = PrecisionEncoding::new(k).unwrap();
            assert!(cover_distance(&enc) <= eps + 1e-12, "eps={eps} k={k}");
        }
        let enc = PrecisionEncoding::new(2).unwrap();
        assert!((cover_distance(&enc) - 1.0 / 6.0).abs() < 1e-4);
    }

    #[test]
    fn dataset_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let ds = generate_synthetic(4, 25, 100.0, 11).unwrap();
        write_dataset(&ds, &path).unwrap();
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with("x1,x2,x3,x4,y\n"));
        let meta = std::fs::read_to_string(meta_path(&path)).unwrap();
        assert!(meta.contains("d = 4\nN = 25\nseed = 11\nw_true = "));
        assert_eq!(read_dataset(&path).unwrap(), ds);
    }
}
