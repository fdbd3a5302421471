//! Decision procedures for embeddability, bi-embeddability and isomorphism of
//! three families of finite structures:
//!
//! * [`symspec`]: real symmetric matrices standing in for bounded self-adjoint
//!   operators, with their functional calculus, spectral invariants and the
//!   construction of approximately conjugating orthogonal maps.
//! * [`maharam`]: probability algebras classified by their atoms and weighted
//!   homogeneous blocks.
//! * [`apra`]: finite atomless algebras with a measure-preserving permutation,
//!   Rokhlin towers and tower-matching conjugacies.
//! * [`randomization`]: separable randomizations classified by density
//!   functions over a catalog of model types.
//!
//! The [`cli`] module wires these into file-driven jobs that emit
//! independently checkable certificates.

pub mod apra;
pub mod cli;
pub mod flow;
pub mod maharam;
pub mod randomization;
pub mod rational;
pub mod symspec;

pub use num::BigRational;
