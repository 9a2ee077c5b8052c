//! Spectral flow and Atiyah-Patodi-Singer indices of finite-dimensional
//! Hermitian families.
//!
//! The crate computes the spectral flow of a family `A(t)`, `t ∈ [0, T]`,
//! through flow partitions, builds the unitary evolution operator of
//! `d/dt - iA` and the non-unitary one of `d/dt + A`, and evaluates the
//! indices of both boundary-value operators under APS boundary conditions by
//! several independent routes so that they can be cross-checked.
//!
//! Module map:
//! - [`linalg`]: Hermitian eigendecomposition, spectral projections,
//!   subspaces, thresholded rank.
//! - [`families`]: operator families and their constructors.
//! - [`spectral_flow`]: flow partitions and the spectral-flow integer.
//! - [`evolution`]: propagators, evolved families, the Cauchy solver.
//! - [`aps`]: Lorentzian and Riemannian APS indices and equality checks.
//! - [`harness`]: experiment configs, suites, reports and exports.

pub mod aps;
pub mod error;
pub mod evolution;
pub mod families;
pub mod harness;
pub mod index;
pub mod linalg;
pub mod parallel;
pub mod spectral_flow;
pub mod tolerance;

pub use error::{Error, Result};
pub use families::OperatorFamily;
pub use index::{IndexMethod, IndexReport};
pub use tolerance::Tolerances;
