use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SpectralError;

/// Largest accepted `‖UᵀU − I‖` for an [`OrthogonalMap`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Dense real symmetric matrix. Symmetry is exact: `a[i][j] == a[j][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfAdjointOperator {
    matrix: DMatrix<f64>,
}

/// Wire form shared by operators and orthogonal maps.
#[derive(Serialize, Deserialize)]
struct DenseRows {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

fn check_rows(dim: usize, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, SpectralError> {
    if dim == 0 || rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(SpectralError::BadShape);
    }
    for (i, row) in rows.iter().enumerate() {
        if let Some(j) = row.iter().position(|x| !x.is_finite()) {
            return Err(SpectralError::NonFinite { row: i, col: j });
        }
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

impl SelfAdjointOperator {
    /// Builds an operator from row-major entries, rejecting asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SpectralError> {
        let matrix = check_rows(rows.len(), rows)?;
        Self::from_matrix(matrix)
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self, SpectralError> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(SpectralError::BadShape);
        }
        for i in 0..n {
            for j in 0..n {
                if !matrix[(i, j)].is_finite() {
                    return Err(SpectralError::NonFinite { row: i, col: j });
                }
                if j > i && matrix[(i, j)] != matrix[(j, i)] {
                    return Err(SpectralError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(SelfAdjointOperator { matrix })
    }

    /// Replaces `m` by `(m + mᵀ)/2` with the upper triangle mirrored, so the
    /// result is symmetric bit for bit.
    pub fn symmetrized(m: &DMatrix<f64>) -> Result<Self, SpectralError> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(SpectralError::BadShape);
        }
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Self::from_matrix(out)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self, SpectralError> {
        if values.is_empty() {
            return Err(SpectralError::BadShape);
        }
        Self::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(values)))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        SelfAdjointOperator { matrix: DMatrix::identity(dim, dim) }
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        SelfAdjointOperator { matrix: DMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.matrix)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// `A²`, symmetrized against rounding.
    pub fn square(&self) -> SelfAdjointOperator {
        Self::symmetrized(&(&self.matrix * &self.matrix)).expect("square of a finite operator")
    }

    /// `U A Uᵀ`, symmetrized against rounding.
    pub fn conjugate_by(&self, u: &OrthogonalMap) -> SelfAdjointOperator {
        let m = u.matrix() * &self.matrix * u.matrix().transpose();
        Self::symmetrized(&m).expect("conjugate of a finite operator")
    }
}

impl Serialize for SelfAdjointOperator {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DenseRows { dim: self.dim(), rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SelfAdjointOperator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = DenseRows::deserialize(d)?;
        let matrix = check_rows(raw.dim, &raw.rows).map_err(serde::de::Error::custom)?;
        SelfAdjointOperator::from_matrix(matrix).map_err(serde::de::Error::custom)
    }
}

/// Real orthogonal matrix, `‖UᵀU − I‖_op ≤ 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMap {
    matrix: DMatrix<f64>,
}

impl OrthogonalMap {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self, SpectralError> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(SpectralError::BadShape);
        }
        if let Some(k) = matrix.iter().position(|x| !x.is_finite()) {
            return Err(SpectralError::NonFinite { row: k % n, col: k / n });
        }
        let map = OrthogonalMap { matrix };
        let defect = map.orthogonality_defect()?;
        if defect > ORTHOGONALITY_TOL {
            return Err(SpectralError::NotOrthogonal { defect });
        }
        Ok(map)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SpectralError> {
        Self::from_matrix(check_rows(rows.len(), rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        OrthogonalMap { matrix: DMatrix::identity(dim, dim) }
    }

    /// `‖UᵀU − I‖_op`.
    pub fn orthogonality_defect(&self) -> Result<f64, SpectralError> {
        let n = self.dim();
        let gram = self.matrix.transpose() * &self.matrix - DMatrix::<f64>::identity(n, n);
        super::eigen::symmetric_part_norm(&gram)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        to_rows(&self.matrix)
    }

    pub fn transpose(&self) -> OrthogonalMap {
        OrthogonalMap { matrix: self.matrix.transpose() }
    }

    pub fn compose(&self, other: &OrthogonalMap) -> OrthogonalMap {
        OrthogonalMap { matrix: &self.matrix * &other.matrix }
    }
}

impl Serialize for OrthogonalMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DenseRows { dim: self.dim(), rows: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OrthogonalMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = DenseRows::deserialize(d)?;
        let matrix = check_rows(raw.dim, &raw.rows).map_err(serde::de::Error::custom)?;
        OrthogonalMap::from_matrix(matrix).map_err(serde::de::Error::custom)
    }
}
