//! Spectral calculus for real symmetric matrices.
//!
//! A [`SelfAdjointOperator`] is the finite-dimensional stand-in for a bounded
//! self-adjoint operator. On top of a Jacobi eigensolver this module provides
//! the functional calculus (square root, absolute value, positive part
//! projection, decomposition of the identity), Riemann sums over spectral
//! partitions, symbolic [`SpectralDescription`]s with their equivalence and
//! embeddability checks, and the block construction of an orthogonal map
//! conjugating one operator to within `ε` of another.

mod calculus;
mod description;
mod eigen;
mod operator;
mod unitary;

pub use calculus::{
    abs_operator, identity_decomposition, positive_projection, positive_sqrt,
    spectral_riemann_sum, RiemannPartition, SQRT_MAX_STEPS, SQRT_STEP_TOL,
};
pub use description::{
    describe, description_embeddable, spectrally_equivalent, EigenMultiplicity,
    SpectralDescription, VALUE_TOL,
};
pub use eigen::{eigendecompose, operator_norm, symmetric_part_norm, Eigen};
pub use operator::{OrthogonalMap, SelfAdjointOperator, ORTHOGONALITY_TOL};
pub use unitary::{
    approximate_unitary, approximate_unitary_with_partition, conjugation_residual, JointPartition,
    projection_pair_invariant,
};

/// Errors raised by the spectral operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("matrix is not square or has no rows")]
    BadShape,
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("map is not orthogonal: |U^T U - I| = {defect:e}")]
    NotOrthogonal { defect: f64 },
    #[error("operator is not positive: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("eigenvalue {eigenvalue} lies outside the partition range")]
    PartitionDoesNotCoverSpectrum { eigenvalue: f64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("partition cell {cell} holds {rank1} eigenvalues of the first operator but {rank2} of the second")]
    CellRankMismatch { cell: usize, rank1: usize, rank2: usize },
    #[error("not a projection: |P^2 - P| = {defect:e}")]
    NotAProjection { defect: f64 },
    #[error("invalid spectral description: {0}")]
    InvalidDescription(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    InternalNoConvergence { sweeps: usize },
}
