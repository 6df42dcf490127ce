//! Cyclic Jacobi eigensolver for real symmetric matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs sorted by decreasing eigenvalue; `vectors` holds them as
/// columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
    pub sweeps: usize,
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[i * n + j] * a[i * n + j];
            }
        }
    }
    sum.sqrt()
}

/// Diagonalizes `matrix` (assumed symmetric) by cyclic Jacobi rotations.
///
/// Stops once the off-diagonal Frobenius norm is at most `tolerance` times
/// the Frobenius norm of the input; fails after `max_sweeps` sweeps.
pub fn jacobi_eigen(matrix: &Array2<f64>, tolerance: f64, max_sweeps: usize) -> Result<SymmetricEigen> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    let mut a: Vec<f64> = matrix.iter().copied().collect();
    // eigenvectors as rows, so rotations touch contiguous memory
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let frobenius = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = tolerance * frobenius;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= target {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::EigenFailure { sweeps, off });
        }
        sweeps += 1;
        // Entries below target / (2n) can be left alone: together they add
        // at most target / 2 to the off-diagonal norm. Early sweeps also skip
        // entries far below the average off-diagonal size.
        let negligible = 0.5 * target / n as f64;
        let skip_below = if sweeps <= 3 { negligible.max(0.2 * off / (n * n) as f64) } else { negligible };
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= skip_below || apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // below round-off next to both diagonal entries
                if sweeps > 3 && app.abs() + 100.0 * apq.abs() == app.abs() && aqq.abs() + 100.0 * apq.abs() == aqq.abs() {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_rows(&mut a, n, p, q, c, s);
                // symmetry: the rotated rows are also the rotated columns
                for k in 0..n {
                    a[k * n + p] = a[p * n + k];
                    a[k * n + q] = a[q * n + k];
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                rotate_rows(&mut vt, n, p, q, c, s);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[[k, dst]] = vt[src * n + k];
        }
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

/// `(row_p, row_q) <- (c row_p - s row_q, s row_p + c row_q)`.
fn rotate_rows(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = m.split_at_mut(q * n);
    let rp = &mut head[p * n..p * n + n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Modified Gram-Schmidt over the columns of `m`, in place.
pub fn orthonormalize_columns(m: &mut Array2<f64>) {
    for j in 0..m.ncols() {
        for i in 0..j {
            let dot = m.column(i).dot(&m.column(j));
            let prev = m.column(i).to_owned();
            m.column_mut(j).scaled_add(-dot, &prev);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        if norm > 0.0 {
            m.column_mut(j).mapv_inplace(|x| x / norm);
        }
    }
}
