use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::calculus::RiemannPartition;
use super::eigen::{eigendecompose, symmetric_part_norm, Eigen};
use super::{OrthogonalMap, SelfAdjointOperator, SpectralError};

/// `‖A₂ − U A₁ Uᵀ‖_op`.
pub fn conjugation_residual(
    a1: &SelfAdjointOperator,
    a2: &SelfAdjointOperator,
    u: &OrthogonalMap,
) -> Result<f64, SpectralError> {
    if a1.dim() != a2.dim() || u.dim() != a1.dim() {
        return Err(SpectralError::DimensionMismatch { left: a1.dim(), right: a2.dim() });
    }
    let conj = u.matrix() * a1.matrix() * u.matrix().transpose();
    symmetric_part_norm(&(a2.matrix() - conj))
}

/// Common partition of `[m, M + ε/2)` for the joint spectrum of two
/// operators, with mesh below `ε`.
///
/// Nominal boundaries sit on a grid of spacing `h ≤ ε/2`; each interior one
/// is moved inside `±h/4` to the point farthest from every eigenvalue, so a
/// pair of numerically equal eigenvalues never straddles a boundary. The
/// mesh stays `≤ 3h/2 ≤ 3ε/4`. Small `ε` needs very many cells, so
/// boundaries are computed on demand instead of stored.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPartition {
    left: f64,
    right: f64,
    h: f64,
    cells: usize,
    joint: Vec<f64>,
}

impl JointPartition {
    fn new(e1: &Eigen, e2: &Eigen, epsilon: f64) -> Self {
        let left = e1.min().min(e2.min());
        let right = e1.max().max(e2.max()) + epsilon / 2.0;
        let cells = ((right - left) / (epsilon / 2.0)).ceil().max(1.0) as usize;
        let h = (right - left) / cells as f64;
        let mut joint: Vec<f64> = e1.values.iter().chain(&e2.values).copied().collect();
        joint.sort_by(f64::total_cmp);
        JointPartition { left, right, h, cells, joint }
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// `γ_k` for `0 ≤ k ≤ cells`.
    pub fn boundary(&self, k: usize) -> f64 {
        if k == 0 {
            return self.left;
        }
        if k >= self.cells {
            return self.right;
        }
        let nominal = self.left + k as f64 * self.h;
        farthest_point(&self.joint, nominal - self.h / 4.0, nominal + self.h / 4.0)
    }

    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.boundary(k), self.boundary(k + 1))
    }

    /// Upper bound on the mesh.
    pub fn mesh_bound(&self) -> f64 {
        if self.cells == 1 {
            self.h
        } else {
            1.5 * self.h
        }
    }

    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.left && x < self.right) {
            return None;
        }
        let k0 = (((x - self.left) / self.h).floor() as usize).min(self.cells - 1);
        (k0.saturating_sub(1)..=(k0 + 1).min(self.cells - 1)).find(|&k| {
            let (lo, hi) = self.cell(k);
            lo <= x && x < hi
        })
    }

    /// The same partition with midpoint tags, every boundary stored.
    pub fn to_riemann(&self) -> Result<RiemannPartition, SpectralError> {
        RiemannPartition::with_midpoints((0..=self.cells).map(|k| self.boundary(k)).collect())
    }
}

/// Point of `[lo, hi]` maximizing the distance to the sorted `points`.
fn farthest_point(points: &[f64], lo: f64, hi: f64) -> f64 {
    let from = points.partition_point(|&x| x < lo);
    let to = points.partition_point(|&x| x <= hi);
    let inside = &points[from..to];
    if inside.is_empty() {
        return 0.5 * (lo + hi);
    }
    let mut best = (inside[0] - lo, lo);
    let last = inside[inside.len() - 1];
    if hi - last > best.0 {
        best = (hi - last, hi);
    }
    for w in inside.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        if half > best.0 {
            best = (half, w[0] + half);
        }
    }
    best.1
}

/// Orthogonal `U` with `‖A₂ − U A₁ Uᵀ‖ < ε`, built block by block.
///
/// A common Riemann partition of the joint spectral range with mesh below
/// `ε` is laid down, both cell projections `E¹(Δ_k)`, `E²(Δ_k)` are formed,
/// and on each cell an isometry between their ranges is taken from the
/// eigenvector bases. The cell ranks must agree; when they do not, the two
/// operators are not `ε`-close in spectrum and `CellRankMismatch` is raised.
pub fn approximate_unitary(
    a1: &SelfAdjointOperator,
    a2: &SelfAdjointOperator,
    epsilon: f64,
) -> Result<OrthogonalMap, SpectralError> {
    approximate_unitary_with_partition(a1, a2, epsilon).map(|(u, _)| u)
}

/// [`approximate_unitary`] that also returns the partition it used.
pub fn approximate_unitary_with_partition(
    a1: &SelfAdjointOperator,
    a2: &SelfAdjointOperator,
    epsilon: f64,
) -> Result<(OrthogonalMap, JointPartition), SpectralError> {
    if a1.dim() != a2.dim() {
        return Err(SpectralError::DimensionMismatch { left: a1.dim(), right: a2.dim() });
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(SpectralError::InvalidParameter("epsilon must be positive".into()));
    }
    let e1 = eigendecompose(a1)?;
    let e2 = eigendecompose(a2)?;
    let partition = JointPartition::new(&e1, &e2, epsilon);

    // only cells holding an eigenvalue matter; the rest have rank 0 on both sides
    let mut cells: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (side, e) in [&e1, &e2].into_iter().enumerate() {
        for (i, &x) in e.values.iter().enumerate() {
            let k = partition.locate(x).ok_or(SpectralError::PartitionDoesNotCoverSpectrum { eigenvalue: x })?;
            let entry = cells.entry(k).or_default();
            if side == 0 { entry.0.push(i) } else { entry.1.push(i) }
        }
    }

    let n = a1.dim();
    let mut u = DMatrix::<f64>::zeros(n, n);
    for (&k, (c1, c2)) in &cells {
        if c1.len() != c2.len() {
            return Err(SpectralError::CellRankMismatch { cell: k, rank1: c1.len(), rank2: c2.len() });
        }
        // U_k sends the i-th eigenvector of A₁ in the cell to the i-th of A₂
        for (&i, &j) in c1.iter().zip(c2) {
            u += e2.vectors.column(j) * e1.vectors.column(i).transpose();
        }
    }
    Ok((OrthogonalMap::from_matrix(u)?, partition))
}

/// `(dim H_P, dim H_P^⊥)` for an orthogonal projection `P`.
pub fn projection_pair_invariant(
    p: &SelfAdjointOperator,
    tol: f64,
) -> Result<(usize, usize), SpectralError> {
    let defect = symmetric_part_norm(&(p.square().matrix() - p.matrix()))?;
    if defect > tol {
        return Err(SpectralError::NotAProjection { defect });
    }
    let eig = eigendecompose(p)?;
    let rank = eig.values.iter().filter(|&&x| (x - 1.0).abs() <= tol).count();
    Ok((rank, p.dim() - rank))
}
