use nalgebra::{DMatrix, DVector};

use super::{SelfAdjointOperator, SpectralError};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    /// `Q · diag(f(λ)) · Qᵀ`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        self.with_values(&d)
    }

    /// `Q · diag(d) · Qᵀ`, one entry of `d` per eigenvector.
    pub fn with_values(&self, d: &[f64]) -> DMatrix<f64> {
        let d = DVector::from_column_slice(d);
        &self.vectors * DMatrix::from_diagonal(&d) * self.vectors.transpose()
    }

    /// Orthogonal projection onto the span of eigenvectors selected by `keep`.
    pub fn projection(&self, keep: impl Fn(f64) -> bool) -> DMatrix<f64> {
        self.apply(|x| if keep(x) { 1.0 } else { 0.0 })
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Cyclic Jacobi eigendecomposition `A = Q · diag(λ) · Qᵀ`.
///
/// Each rotation annihilates one off-diagonal pair; sweeps repeat until the
/// off-diagonal mass is negligible against the Frobenius norm of `A`.
pub fn eigendecompose(a: &SelfAdjointOperator) -> Result<Eigen, SpectralError> {
    jacobi(a.matrix())
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            sum += a[(p, q)] * a[(p, q)];
        }
    }
    (2.0 * sum).sqrt()
}

pub(crate) fn jacobi(input: &DMatrix<f64>) -> Result<Eigen, SpectralError> {
    let n = input.nrows();
    let mut a = input.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = input.norm();
    let target = 1e-17 * scale;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                // skip entries already below the rounding level of both diagonals
                if apq.abs() * 1e18 < app.abs() && apq.abs() * 1e18 < aqq.abs() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > target {
        return Err(SpectralError::InternalNoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// `‖A‖_op = max |λ|`.
pub fn operator_norm(a: &SelfAdjointOperator) -> Result<f64, SpectralError> {
    let e = eigendecompose(a)?;
    Ok(e.values.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

/// Operator norm of the symmetric part of a square matrix. Every residual
/// this crate measures is symmetric up to rounding, so this is its norm.
pub fn symmetric_part_norm(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    operator_norm(&SelfAdjointOperator::symmetrized(m)?)
}
