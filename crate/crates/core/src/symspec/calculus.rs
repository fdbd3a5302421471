use nalgebra::DMatrix;

use super::eigen::{eigendecompose, symmetric_part_norm};
use super::{SelfAdjointOperator, SpectralError};

/// Stop the square-root recursion once `‖B_{n+1} − B_n‖_F` drops below this.
pub const SQRT_STEP_TOL: f64 = 1e-12;
/// Hard cap on square-root recursion steps.
pub const SQRT_MAX_STEPS: usize = 200_000;

const POSITIVITY_TOL: f64 = 1e-10;
const PROJECTION_TOL: f64 = 1e-9;

/// Positive square root by the monotone recursion
/// `B_{n+1} = B_n + ½(A − B_n²)`, `B_0 = 0`.
///
/// The recursion only converges for `‖A‖ ≤ 1`, so it runs on `A/‖A‖` and the
/// result is scaled back by `√‖A‖`. Eigenvalues down to `−1e-10` are treated
/// as rounding noise and clamped to zero first.
///
/// Every `B_n` is a polynomial in `A`, so the iteration is carried out on the
/// eigenvalues in the eigenbasis of `A`; the Frobenius norm of the step is
/// the same there.
pub fn positive_sqrt(a: &SelfAdjointOperator) -> Result<SelfAdjointOperator, SpectralError> {
    let eig = eigendecompose(a)?;
    if eig.min() < -POSITIVITY_TOL {
        return Err(SpectralError::NotPositive { min_eigenvalue: eig.min() });
    }
    let norm = eig.max().max(0.0);
    let n = a.dim();
    if norm == 0.0 {
        return Ok(SelfAdjointOperator::zero(n));
    }

    let target: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0) / norm).collect();
    let mut b = vec![0.0; n];
    for _ in 0..SQRT_MAX_STEPS {
        let mut step_sq = 0.0;
        for (bi, &t) in b.iter_mut().zip(&target) {
            let step = 0.5 * (t - *bi * *bi);
            *bi += step;
            step_sq += step * step;
        }
        if step_sq.sqrt() <= SQRT_STEP_TOL {
            break;
        }
    }
    let root = norm.sqrt();
    let scaled: Vec<f64> = b.iter().map(|x| x * root).collect();
    SelfAdjointOperator::symmetrized(&eig.with_values(&scaled))
}

/// `|A|`, the positive square root of `A²`.
pub fn abs_operator(a: &SelfAdjointOperator) -> Result<SelfAdjointOperator, SpectralError> {
    positive_sqrt(&a.square())
}

/// `E₊`: orthogonal projection onto `Ker(A − |A|)`, i.e. the span of the
/// eigenvectors whose eigenvalue is `≥ −1e-9`.
pub fn positive_projection(a: &SelfAdjointOperator) -> Result<SelfAdjointOperator, SpectralError> {
    let eig = eigendecompose(a)?;
    SelfAdjointOperator::symmetrized(&eig.projection(|x| x >= -PROJECTION_TOL))
}

/// `E_λ`: projection onto the eigenspaces with eigenvalue strictly below `λ`
/// (the left-continuous member of the decomposition of the identity).
pub fn identity_decomposition(
    a: &SelfAdjointOperator,
    lambda: f64,
) -> Result<SelfAdjointOperator, SpectralError> {
    let eig = eigendecompose(a)?;
    SelfAdjointOperator::symmetrized(&eig.projection(|x| x < lambda))
}

/// Consecutive half-open cells `[γ_k, μ_k)` covering `[m, M+δ)`, each with a
/// tag `ν_k ∈ [γ_k, μ_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannPartition {
    boundaries: Vec<f64>,
    tags: Vec<f64>,
}

impl RiemannPartition {
    /// `boundaries` are `γ_0 < γ_1 < … < γ_N` (so `N` cells); one tag per cell.
    pub fn new(boundaries: Vec<f64>, tags: Vec<f64>) -> Result<Self, SpectralError> {
        if boundaries.len() < 2 {
            return Err(SpectralError::InvalidPartition("need at least one cell".into()));
        }
        if boundaries.iter().chain(&tags).any(|x| !x.is_finite()) {
            return Err(SpectralError::InvalidPartition("non-finite endpoint or tag".into()));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpectralError::InvalidPartition(
                "boundaries must be strictly increasing".into(),
            ));
        }
        if tags.len() != boundaries.len() - 1 {
            return Err(SpectralError::InvalidPartition("one tag per cell required".into()));
        }
        for (k, &t) in tags.iter().enumerate() {
            if t < boundaries[k] || t >= boundaries[k + 1] {
                return Err(SpectralError::InvalidPartition(format!("tag {k} lies outside its cell")));
            }
        }
        Ok(RiemannPartition { boundaries, tags })
    }

    /// Cells from the given boundaries, tagged at their midpoints.
    pub fn with_midpoints(boundaries: Vec<f64>) -> Result<Self, SpectralError> {
        let tags = boundaries.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self::new(boundaries, tags)
    }

    /// `cells` equal cells over `[left, right)`, midpoint tags.
    pub fn uniform(left: f64, right: f64, cells: usize) -> Result<Self, SpectralError> {
        if cells == 0 || !(left < right) {
            return Err(SpectralError::InvalidPartition("empty range or no cells".into()));
        }
        let width = (right - left) / cells as f64;
        let mut boundaries: Vec<f64> = (0..cells).map(|k| left + k as f64 * width).collect();
        boundaries.push(right);
        Self::with_midpoints(boundaries)
    }

    pub fn left(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn right(&self) -> f64 {
        self.boundaries[self.boundaries.len() - 1]
    }

    pub fn cells(&self) -> usize {
        self.tags.len()
    }

    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.boundaries[k], self.boundaries[k + 1])
    }

    pub fn tags(&self) -> &[f64] {
        &self.tags
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn mesh(&self) -> f64 {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index of the cell containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.left() || x >= self.right() {
            return None;
        }
        // last boundary ≤ x
        let k = self.boundaries.partition_point(|&b| b <= x);
        Some(k - 1)
    }
}

/// `Σ_k ν_k (E_{μ_k} − E_{γ_k})` together with its operator-norm distance to `A`.
pub fn spectral_riemann_sum(
    a: &SelfAdjointOperator,
    partition: &RiemannPartition,
) -> Result<(SelfAdjointOperator, f64), SpectralError> {
    let eig = eigendecompose(a)?;
    let mut cell_of = Vec::with_capacity(eig.values.len());
    for &x in &eig.values {
        match partition.locate(x) {
            Some(k) => cell_of.push(k),
            None => return Err(SpectralError::PartitionDoesNotCoverSpectrum { eigenvalue: x }),
        }
    }
    let n = a.dim();
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for k in 0..partition.cells() {
        let members: Vec<usize> = (0..n).filter(|&i| cell_of[i] == k).collect();
        if members.is_empty() {
            continue;
        }
        // E(Δ_k) = E_{μ_k} − E_{γ_k}: the eigenvectors with γ_k ≤ λ < μ_k
        let mut cell_projection = DMatrix::<f64>::zeros(n, n);
        for i in members {
            let q = eig.vectors.column(i);
            cell_projection += q * q.transpose();
        }
        sum += cell_projection * partition.tags()[k];
    }
    let approx = SelfAdjointOperator::symmetrized(&sum)?;
    let error = symmetric_part_norm(&(a.matrix() - approx.matrix()))?;
    Ok((approx, error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symspec::eigen::operator_norm;

    fn op(rows: &[&[f64]]) -> SelfAdjointOperator {
        SelfAdjointOperator::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn dist(a: &SelfAdjointOperator, b: &SelfAdjointOperator) -> f64 {
        symmetric_part_norm(&(a.matrix() - b.matrix())).unwrap()
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let i3 = SelfAdjointOperator::identity(3);
        assert!(dist(&positive_sqrt(&i3).unwrap(), &i3) < 1e-12);
        let d = SelfAdjointOperator::diagonal(&[4.0, 9.0]).unwrap();
        let expected = SelfAdjointOperator::diagonal(&[2.0, 3.0]).unwrap();
        assert!(dist(&positive_sqrt(&d).unwrap(), &expected) < 1e-9);
    }

    #[test]
    fn sqrt_residual_against_eigen_oracle() {
        let a = op(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let s = positive_sqrt(&a).unwrap();
        assert!(dist(&s.square(), &a) <= 1e-8 * operator_norm(&a).unwrap().max(1.0));
        // eigen oracle: √1 and √3 on the eigenvectors (1,−1)/√2 and (1,1)/√2
        let (r1, r3) = (1.0_f64, 3.0_f64.sqrt());
        let oracle = op(&[&[(r1 + r3) / 2.0, (r3 - r1) / 2.0], &[(r3 - r1) / 2.0, (r1 + r3) / 2.0]]);
        assert!(dist(&s, &oracle) < 1e-8);
    }

    #[test]
    fn sqrt_rejects_negative_and_clamps_noise() {
        let neg = SelfAdjointOperator::diagonal(&[1.0, -0.5]).unwrap();
        assert!(matches!(positive_sqrt(&neg), Err(SpectralError::NotPositive { .. })));
        let noisy = SelfAdjointOperator::diagonal(&[1.0, -1e-12]).unwrap();
        let s = positive_sqrt(&noisy).unwrap();
        assert!(dist(&s, &SelfAdjointOperator::diagonal(&[1.0, 0.0]).unwrap()) < 1e-9);
    }

    #[test]
    fn abs_examples() {
        let d = SelfAdjointOperator::diagonal(&[1.0, -1.0]).unwrap();
        assert!(dist(&abs_operator(&d).unwrap(), &SelfAdjointOperator::identity(2)) < 1e-9);
        let z = SelfAdjointOperator::zero(3);
        assert_eq!(abs_operator(&z).unwrap(), z);
        let a = op(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let two = SelfAdjointOperator::diagonal(&[2.0, 2.0]).unwrap();
        assert!(dist(&abs_operator(&a).unwrap(), &two) < 1e-8);
    }

    #[test]
    fn positive_projection_examples() {
        let a = SelfAdjointOperator::diagonal(&[1.0, -1.0, 0.0]).unwrap();
        let expected = SelfAdjointOperator::diagonal(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(positive_projection(&a).unwrap(), expected);
        let minus = SelfAdjointOperator::diagonal(&[-1.0, -1.0]).unwrap();
        assert_eq!(positive_projection(&minus).unwrap(), SelfAdjointOperator::zero(2));
        let id = SelfAdjointOperator::identity(2);
        assert_eq!(positive_projection(&id).unwrap(), id);
    }

    #[test]
    fn identity_decomposition_examples() {
        let a = SelfAdjointOperator::diagonal(&[1.0, 2.0]).unwrap();
        assert_eq!(
            identity_decomposition(&a, 1.5).unwrap(),
            SelfAdjointOperator::diagonal(&[1.0, 0.0]).unwrap()
        );
        assert_eq!(identity_decomposition(&a, 0.5).unwrap(), SelfAdjointOperator::zero(2));
        // λ = m is still zero (left continuity)
        assert_eq!(identity_decomposition(&a, 1.0).unwrap(), SelfAdjointOperator::zero(2));
        assert_eq!(identity_decomposition(&a, 3.0).unwrap(), SelfAdjointOperator::identity(2));
    }

    #[test]
    fn riemann_sum_examples() {
        let a = SelfAdjointOperator::diagonal(&[0.1, 0.6]).unwrap();
        let exact = RiemannPartition::new(vec![0.1, 0.6, 0.7], vec![0.1, 0.6]).unwrap();
        let (approx, err) = spectral_riemann_sum(&a, &exact).unwrap();
        assert_eq!(err, 0.0);
        assert_eq!(approx, a);

        let coarse = RiemannPartition::uniform(0.1, 1.1, 2).unwrap();
        assert!((coarse.mesh() - 0.5).abs() < 1e-15);
        let (_, err) = spectral_riemann_sum(&a, &coarse).unwrap();
        // midpoints 0.35 and 0.85: both eigenvalues sit 0.25 away
        assert!((err - 0.25).abs() < 1e-12);
        assert!(err <= coarse.mesh());

        let short = RiemannPartition::uniform(0.0, 0.5, 5).unwrap();
        assert!(matches!(
            spectral_riemann_sum(&a, &short),
            Err(SpectralError::PartitionDoesNotCoverSpectrum { .. })
        ));
    }

    #[test]
    fn partition_validation() {
        assert!(RiemannPartition::new(vec![0.0], vec![]).is_err());
        assert!(RiemannPartition::new(vec![0.0, 0.0], vec![0.0]).is_err());
        assert!(RiemannPartition::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(RiemannPartition::new(vec![0.0, 1.0, 2.0], vec![0.5]).is_err());
        let p = RiemannPartition::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.9]).unwrap();
        assert_eq!(p.mesh(), 2.0);
        assert_eq!(p.locate(1.0), Some(1));
        assert_eq!(p.locate(3.0), None);
        assert_eq!(p.locate(-0.1), None);
    }
}
