//! Dense real square matrices and a cyclic Jacobi eigensolver for the
//! symmetric case.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square real matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows. Panics if the rows are ragged or not square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix must be square");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self[(i, j)] * self[(i, j)];
                }
            }
        }
        s.sqrt()
    }

    /// Column `j` as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Relative reduction of the off-diagonal Frobenius norm that ends the sweeps.
pub const JACOBI_TOLERANCE: f64 = 1e-14;

/// Sweep cap. Cyclic Jacobi converges quadratically, so well-posed inputs
/// finish in well under 20 sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 60;

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matrix whose column `j`
/// is the unit eigenvector paired with eigenvalue `j`. Each eigenvector is
/// sign-normalized so that its largest-magnitude component (lowest index on
/// ties) is positive.
///
/// Sweeps stop once the off-diagonal norm falls below [`JACOBI_TOLERANCE`]
/// times its initial value; one more polishing sweep is then applied, which
/// pushes the residual to rounding level because convergence is quadratic.
pub fn symmetric_eigen(h: &RealMatrix) -> Result<(Vec<f64>, RealMatrix)> {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = RealMatrix::identity(n);

    let off0 = a.off_diagonal_norm();
    if off0 > 0.0 {
        let target = JACOBI_TOLERANCE * off0;
        let mut converged = false;
        for _ in 0..JACOBI_MAX_SWEEPS {
            sweep(&mut a, &mut v);
            if a.off_diagonal_norm() <= target {
                sweep(&mut a, &mut v);
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off_norm: a.off_diagonal_norm(),
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));

    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = RealMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        for row in 0..n {
            if v[(row, src)].abs() > v[(pivot, src)].abs() {
                pivot = row;
            }
        }
        let sign = if v[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            vectors[(row, col)] = sign * v[(row, src)];
        }
    }
    Ok((values, vectors))
}

fn sweep(a: &mut RealMatrix, v: &mut RealMatrix) {
    let n = a.dim();
    for p in 0..n {
        for q in (p + 1)..n {
            let apq = a[(p, q)];
            if apq == 0.0 {
                continue;
            }
            let app = a[(p, p)];
            let aqq = a[(q, q)];
            // t = tan of the rotation angle, smaller root for stability
            let theta = (aqq - app) / (2.0 * apq);
            let t = if theta.is_infinite() {
                0.0
            } else {
                theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
            };
            let t = if theta == 0.0 { 1.0 } else { t };
            if t == 0.0 {
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                continue;
            }
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;

            for k in 0..n {
                let akp = a[(k, p)];
                let akq = a[(k, q)];
                a[(k, p)] = c * akp - s * akq;
                a[(k, q)] = s * akp + c * akq;
            }
            for k in 0..n {
                let apk = a[(p, k)];
                let aqk = a[(q, k)];
                a[(p, k)] = c * apk - s * aqk;
                a[(q, k)] = s * apk + c * aqk;
            }
            a[(p, p)] = app - t * apq;
            a[(q, q)] = aqq + t * apq;
            a[(p, q)] = 0.0;
            a[(q, p)] = 0.0;

            for k in 0..n {
                let vkp = v[(k, p)];
                let vkq = v[(k, q)];
                v[(k, p)] = c * vkp - s * vkq;
                v[(k, q)] = s * vkp + c * vkq;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(values: &[f64], vectors: &RealMatrix) -> RealMatrix {
        let n = values.len();
        let mut m = RealMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (0..n)
                    .map(|k| values[k] * vectors[(i, k)] * vectors[(j, k)])
                    .sum();
            }
        }
        m
    }

    #[test]
    fn two_by_two_exchange() {
        let h = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let (vals, _) = symmetric_eigen(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15);
        assert!((vals[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_input_is_returned_sorted() {
        let h = RealMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let (vals, vecs) = symmetric_eigen(&h).unwrap();
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        assert_eq!(vecs.column(0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn dense_random_matrix_reconstructs() {
        // deterministic pseudo-random symmetric fill
        let n = 12;
        let mut h = RealMatrix::zeros(n);
        let mut x: u64 = 12345;
        for i in 0..n {
            for j in 0..=i {
                x = x
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let r = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                h[(i, j)] = r;
                h[(j, i)] = r;
            }
        }
        let (vals, vecs) = symmetric_eigen(&h).unwrap();
        let diff = {
            let r = reconstruct(&vals, &vecs);
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (r[(i, j)] - h[(i, j)]).abs())
                .fold(0.0, f64::max)
        };
        assert!(diff < 1e-13, "{diff}");
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| vecs[(k, i)] * vecs[(k, j)]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-13);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_eigenvalues() {
        let h = RealMatrix::from_rows(&[
            vec![2.0, 1.0, 1.0],
            vec![1.0, 2.0, 1.0],
            vec![1.0, 1.0, 2.0],
        ]);
        let (vals, vecs) = symmetric_eigen(&h).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
        assert!((vals[2] - 4.0).abs() < 1e-14);
        let r = reconstruct(&vals, &vecs);
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[(i, j)] - h[(i, j)]).abs() < 1e-14);
            }
        }
    }
}
