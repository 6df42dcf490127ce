//! Reconstruction-error detectors for unknown workloads.
//!
//! Each known class gets a basis `V_w` of right singular vectors of its
//! training matrix `X_w`, truncated by an energy rule, and a threshold
//! `mu_w + alpha * sigma_w` over the training reconstruction errors
//! `||x - V_w V_w^T x||`. A test vector predicted as class `w` is accepted
//! only when its error is strictly below that threshold.
//!
//! The same machinery fitted on all training rows at once gives the naive
//! single-subspace baseline; [`naive_rejection`] is the max-softmax baseline.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, orthonormalize_columns, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE};

pub const DEFAULT_ENERGY: f64 = 0.999;
pub const DEFAULT_ALPHA_GRID: [f64; 5] = [1.0, 1.5, 2.0, 2.5, 3.0];
/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Known(usize),
    Unknown,
}

impl Decision {
    pub fn is_unknown(&self) -> bool {
        matches!(self, Decision::Unknown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub mean: f64,
    /// Population standard deviation (divides by N).
    pub std: f64,
}

impl Calibration {
    pub fn threshold(&self, alpha: f64) -> f64 {
        self.mean + alpha * self.std
    }
}

/// Orthonormal basis of a truncated right singular subspace plus its
/// threshold statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceDetector {
    /// `F x R` with orthonormal columns.
    pub basis: Array2<f64>,
    /// Squared singular values `lambda_k^2` of the fitted matrix, descending,
    /// after the numerical floor.
    pub spectrum: Vec<f64>,
    pub calibration: Option<Calibration>,
}

/// Smallest `r` with `sum_{k<=r} spectrum[k] > energy * total`.
pub fn energy_rank(spectrum: &[f64], energy: f64) -> usize {
    let total: f64 = spectrum.iter().sum();
    let mut acc = 0.0;
    for (i, s) in spectrum.iter().enumerate() {
        acc += s;
        if acc > energy * total {
            return i + 1;
        }
    }
    spectrum.len()
}

/// Residual below this fraction of the largest row norm marks a row as
/// already spanned by the earlier ones.
pub const ROW_SPACE_TOLERANCE: f64 = 1e-9;

/// Orthonormal basis (as rows) of the span of `x`'s rows, by modified
/// Gram-Schmidt with one reorthogonalization pass.
fn row_space_basis(x: &Array2<f64>) -> Array2<f64> {
    let cols = x.ncols();
    let max_norm = x.rows().into_iter().map(norm).fold(0.0, f64::max);
    let cut = ROW_SPACE_TOLERANCE * max_norm;
    let mut basis: Vec<f64> = Vec::new();
    let mut rank = 0;
    for row in x.rows() {
        let mut v = row.to_owned();
        for _ in 0..2 {
            for b in basis.chunks_exact(cols) {
                let b = ArrayView1::from(b);
                let d = b.dot(&v);
                v.scaled_add(-d, &b);
            }
        }
        let n = norm(v.view());
        if n > cut {
            basis.extend(v.iter().map(|e| e / n));
            rank += 1;
        }
    }
    Array2::from_shape_vec((rank, cols), basis).expect("rank rows of length cols")
}

/// Right singular vectors of `x` kept by the energy rule, with the
/// floored squared singular values.
///
/// Works on the columns of `x` that are not identically zero, expressed in
/// an orthonormal basis `Q` of the row space: the Gram matrix
/// `Q^T X^T X Q` is only `rank x rank` and shares the non-zero spectrum of
/// `X^T X`. Its eigenvectors `u` map back as `v = Q u`.
pub fn truncated_right_singular(x: &Array2<f64>, energy: f64) -> Result<(Array2<f64>, Vec<f64>)> {
    let (rows, cols) = x.dim();
    let support: Vec<usize> = (0..cols)
        .filter(|&j| x.column(j).iter().any(|&v| v != 0.0))
        .collect();
    if rows == 0 || support.is_empty() {
        return Err(Error::ZeroMatrix);
    }
    let xs = x.select(Axis(1), &support);
    let q = row_space_basis(&xs);
    let coords = xs.dot(&q.t());
    let gram = coords.t().dot(&coords);
    let eig = jacobi_eigen(&gram, JACOBI_TOLERANCE, JACOBI_MAX_SWEEPS)?;

    let largest = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    if largest == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let spectrum: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| if l < EIGEN_FLOOR * largest { 0.0 } else { l })
        .collect();
    let rank = energy_rank(&spectrum, energy).min(rows.min(cols));

    let mut reduced = q.t().dot(&eig.vectors.slice(ndarray::s![.., ..rank]));
    orthonormalize_columns(&mut reduced);
    let mut basis = Array2::zeros((cols, rank));
    for (r, &j) in support.iter().enumerate() {
        basis.row_mut(j).assign(&reduced.row(r));
    }
    Ok((basis, spectrum))
}

/// `||x - V (V^T x)||_2`, computed with two matrix-vector products.
pub fn recon_error(basis: &Array2<f64>, x: ArrayView1<f64>) -> Result<f64> {
    if x.len() != basis.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("vector of length {}", basis.nrows()),
            got: format!("length {}", x.len()),
        });
    }
    let coeffs = basis.t().dot(&x);
    let recon = basis.dot(&coeffs);
    Ok(x.iter()
        .zip(recon.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

impl SubspaceDetector {
    /// Fits the basis (uncalibrated).
    pub fn fit(x: &Array2<f64>, energy: f64) -> Result<Self> {
        let (basis, spectrum) = truncated_right_singular(x, energy)?;
        Ok(Self {
            basis,
            spectrum,
            calibration: None,
        })
    }

    /// Fits and calibrates on the same rows.
    pub fn fit_calibrated(x: &Array2<f64>, energy: f64) -> Result<Self> {
        let mut d = Self::fit(x, energy)?;
        d.calibrate(x)?;
        Ok(d)
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn error(&self, x: ArrayView1<f64>) -> Result<f64> {
        recon_error(&self.basis, x)
    }

    pub fn errors(&self, rows: &Array2<f64>) -> Result<Vec<f64>> {
        rows.rows().into_iter().map(|r| self.error(r)).collect()
    }

    /// Mean and population standard deviation of the reconstruction errors
    /// of `x`'s rows.
    pub fn calibrate(&mut self, x: &Array2<f64>) -> Result<Calibration> {
        let errors = self.errors(x)?;
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        let cal = Calibration {
            mean,
            std: var.sqrt(),
        };
        self.calibration = Some(cal);
        Ok(cal)
    }

    /// True when `x` reconstructs strictly below `mu + alpha * sigma`.
    pub fn accepts(&self, x: ArrayView1<f64>, alpha: f64) -> Result<Option<bool>> {
        let Some(cal) = self.calibration else {
            return Ok(None);
        };
        Ok(Some(self.error(x)? < cal.threshold(alpha)))
    }
}

/// One detector per known class.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBank {
    pub detectors: Vec<SubspaceDetector>,
    pub energy: f64,
    pub alpha_grid: Vec<f64>,
}

impl DetectorBank {
    /// Fits and calibrates one detector per class in parallel.
    /// `per_class[w]` is the training matrix `X_w`.
    pub fn fit(per_class: &[Array2<f64>], energy: f64) -> Result<Self> {
        let dims: Vec<usize> = per_class.iter().map(|x| x.ncols()).collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::ShapeMismatch {
                expected: "equal feature widths for every class".into(),
                got: format!("{dims:?}"),
            });
        }
        let detectors = per_class
            .par_iter()
            .map(|x| SubspaceDetector::fit_calibrated(x, energy))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            detectors,
            energy,
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
        })
    }

    /// Groups `rows` by `labels` (class indices in `0..n_classes`) and fits.
    pub fn fit_labeled(rows: &Array2<f64>, labels: &[usize], n_classes: usize, energy: f64) -> Result<Self> {
        let per_class = split_by_class(rows, labels, n_classes)?;
        Self::fit(&per_class, energy)
    }

    pub fn n_classes(&self) -> usize {
        self.detectors.len()
    }

    pub fn error(&self, x: ArrayView1<f64>, class: usize) -> Result<f64> {
        self.detector(class)?.error(x)
    }

    fn detector(&self, class: usize) -> Result<&SubspaceDetector> {
        self.detectors.get(class).ok_or_else(|| Error::ShapeMismatch {
            expected: format!("class index < {}", self.detectors.len()),
            got: class.to_string(),
        })
    }

    /// Accepts the prediction `class` only if the reconstruction error under
    /// that class's basis is strictly below its threshold.
    pub fn decide(&self, x: ArrayView1<f64>, class: usize, alpha: f64) -> Result<Decision> {
        match self.detector(class)?.accepts(x, alpha)? {
            None => Err(Error::UncalibratedDetector(class)),
            Some(true) => Ok(Decision::Known(class)),
            Some(false) => Ok(Decision::Unknown),
        }
    }
}

pub fn split_by_class(rows: &Array2<f64>, labels: &[usize], n_classes: usize) -> Result<Vec<Array2<f64>>> {
    if labels.len() != rows.nrows() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", rows.nrows()),
            got: labels.len().to_string(),
        });
    }
    let mut index: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        index
            .get_mut(y)
            .ok_or_else(|| Error::ShapeMismatch {
                expected: format!("label < {n_classes}"),
                got: y.to_string(),
            })?
            .push(i);
    }
    index
        .into_iter()
        .enumerate()
        .map(|(w, idx)| {
            if idx.is_empty() {
                Err(Error::EmptyClass(format!("#{w}")))
            } else {
                Ok(rows.select(Axis(0), &idx))
            }
        })
        .collect()
}

/// Single subspace over all training rows, ignoring classes.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveDetector {
    pub inner: SubspaceDetector,
}

impl NaiveDetector {
    pub fn fit(rows: &Array2<f64>, energy: f64) -> Result<Self> {
        Ok(Self {
            inner: SubspaceDetector::fit_calibrated(rows, energy)?,
        })
    }

    /// Same acceptance rule as [`DetectorBank::decide`] with the pooled basis.
    pub fn decide(&self, x: ArrayView1<f64>, predicted: usize, alpha: f64) -> Result<Decision> {
        match self.inner.accepts(x, alpha)? {
            None => Err(Error::UncalibratedDetector(predicted)),
            Some(true) => Ok(Decision::Known(predicted)),
            Some(false) => Ok(Decision::Unknown),
        }
    }
}

/// Unknown iff the largest softmax probability is below `threshold`.
pub fn naive_rejection(probs: &[f64], threshold: f64) -> Decision {
    let (best, &p) = probs
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, p)| if *p > *acc.1 { (i, p) } else { acc });
    if p < threshold {
        Decision::Unknown
    } else {
        Decision::Known(best)
    }
}

/// Projector `V V^T` (test and diagnostics helper; the detectors never build it).
pub fn projector(basis: &Array2<f64>) -> Array2<f64> {
    basis.dot(&basis.t())
}

pub fn norm(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

pub fn to_array(v: &[f64]) -> Array1<f64> {
    Array1::from(v.to_vec())
}
