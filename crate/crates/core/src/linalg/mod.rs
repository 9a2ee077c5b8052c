//! Dense Hermitian linear algebra.
//!
//! Everything downstream (spectral flow, propagators, index computations)
//! consumes the types in this module: Hermitian matrices, their spectral
//! decompositions, spectral projections, subspaces with orthonormal bases and
//! thresholded rank computations.

mod eigen;
mod hermitian;
mod rank;
mod subspace;

pub use eigen::{
    eigh, eigvalsh, exp_hermitian, exp_i_hermitian, spectral_projection, Interval, Projection,
    SpectralData,
};
pub use hermitian::{matrix_hash, HermitianMatrix};
pub use rank::{rank_kernel, RankKernel, ILL_DETERMINED_GAP};
pub use subspace::{principal_cosines, relative_index, subspace_intersection, Subspace};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest singular value of a general complex matrix.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// `max_{jk} |m_jk|`, a cheap norm for defect reporting.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Spectral-norm distance of `U* U` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let gram = u.adjoint() * u - CMatrix::identity(n, n);
    spectral_norm(&gram)
}

/// Spectral-norm distance between two matrices of equal shape.
pub fn distance(a: &CMatrix, b: &CMatrix) -> f64 {
    spectral_norm(&(a - b))
}

/// Build a complex matrix from real rows.
pub fn real_matrix(rows: &[&[f64]]) -> CMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j], 0.0))
}
