use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-dimension z-scoring fitted on training features.
///
/// A dimension whose spread is below `1e-12 * max(1, |mean|)` counts as
/// constant: it is mean-subtracted and left unscaled (`std` stored as 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub enabled: bool,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// The identity transform over `dim` features.
    pub fn disabled(dim: usize) -> Self {
        Self {
            enabled: false,
            mean: vec![0.0; dim],
            std: vec![0.0; dim],
        }
    }

    /// Fits population mean and standard deviation per column.
    pub fn fit(rows: &Array2<f64>) -> Result<Self> {
        let n = rows.nrows();
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        let mean = rows.mean_axis(Axis(0)).expect("non-empty");
        let mut var = vec![0.0; rows.ncols()];
        for row in rows.rows() {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = x - m;
                *v += d * d;
            }
        }
        let std = var
            .into_iter()
            .zip(&mean)
            .map(|(v, m)| {
                let s = (v / n as f64).sqrt();
                if s <= 1e-12 * m.abs().max(1.0) {
                    0.0
                } else {
                    s
                }
            })
            .collect();
        Ok(Self {
            enabled: true,
            mean: mean.to_vec(),
            std,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_in_place(&self, mut x: ArrayViewMut1<f64>) {
        if !self.enabled {
            return;
        }
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v -= m;
            if *s > 0.0 {
                *v /= s;
            }
        }
    }

    pub fn apply(&self, x: ArrayView1<f64>) -> ndarray::Array1<f64> {
        let mut out = x.to_owned();
        self.apply_in_place(out.view_mut());
        out
    }

    pub fn apply_rows(&self, rows: &Array2<f64>) -> Array2<f64> {
        let mut out = rows.clone();
        for row in out.rows_mut() {
            self.apply_in_place(row);
        }
        out
    }

    pub fn inverse(&self, x: ArrayView1<f64>) -> ndarray::Array1<f64> {
        let mut out = x.to_owned();
        if self.enabled {
            for ((v, m), s) in out.iter_mut().zip(&self.mean).zip(&self.std) {
                if *s > 0.0 {
                    *v *= s;
                }
                *v += m;
            }
        }
        out
    }
}
