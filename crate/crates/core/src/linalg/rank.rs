use serde::Serialize;

use super::{CMatrix, Subspace, C64};

/// Rank decisions whose spectral gap ratio `σ_r / σ_{r+1}` falls below this
/// value are flagged as ill-determined.
pub const ILL_DETERMINED_GAP: f64 = 1e3;

/// SVD-based rank, kernel and cokernel of a rectangular matrix.
#[derive(Clone, Debug)]
pub struct RankKernel {
    pub rank: usize,
    /// Singular values in descending order (`min(rows, cols)` of them).
    pub singular_values: Vec<f64>,
    /// Orthonormal basis of `Ker M` in the column space `C^cols`.
    pub kernel: Subspace,
    /// Orthonormal basis of `Ker M*`, the orthogonal complement of the range.
    pub cokernel: Subspace,
    /// Orthonormal basis of `Ran M`.
    pub range: Subspace,
    /// `σ_r / σ_{r+1}` when a nonzero singular value was dropped.
    pub gap_ratio: Option<f64>,
    pub warning: Option<RankWarning>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankWarning {
    pub rank: usize,
    pub gap_ratio: f64,
    pub message: String,
}

/// Numerical rank with a relative threshold: singular values
/// `σ > tau_relative * σ_max` are counted.
///
/// The kernel comes from the right singular vectors of `M` padded with zero
/// rows to a square matrix (padding rows leaves the right null space alone);
/// the cokernel is computed the same way from `M*`.
pub fn rank_kernel(m: &CMatrix, tau_relative: f64) -> RankKernel {
    let (rows, cols) = m.shape();
    let (sigma, right) = right_svd(m);
    let sigma_max = sigma.first().copied().unwrap_or(0.0);
    let threshold = tau_relative * sigma_max;
    let rank = sigma.iter().take_while(|&&s| s > threshold).count();

    let kernel =
        Subspace::from_orthonormal_unchecked(right.columns(rank, cols - rank).into_owned());
    let row_space = right.columns(0, rank).into_owned();

    let range_basis = if rank == 0 {
        CMatrix::zeros(rows, 0)
    } else {
        let mut u = m * &row_space;
        for (j, &s) in sigma.iter().enumerate().take(rank) {
            u.column_mut(j)
                .iter_mut()
                .for_each(|z| *z /= C64::new(s, 0.0));
        }
        u
    };
    let range = Subspace::from_orthonormal_unchecked(range_basis);

    let (_, left) = right_svd(&m.adjoint());
    let cokernel =
        Subspace::from_orthonormal_unchecked(left.columns(rank, rows - rank).into_owned());

    let gap_ratio = match sigma.get(rank) {
        Some(&next) if rank > 0 && next > 0.0 => Some(sigma[rank - 1] / next),
        _ => None,
    };
    let warning = gap_ratio
        .filter(|&g| g < ILL_DETERMINED_GAP)
        .map(|g| RankWarning {
            rank,
            gap_ratio: g,
            message: format!(
                "ill-determined rank {rank}: gap ratio {g:.3e} below {ILL_DETERMINED_GAP:.0e}"
            ),
        });
    if let Some(w) = &warning {
        log::warn!("{}", w.message);
    }

    RankKernel {
        rank,
        singular_values: sigma.into_iter().take(rows.min(cols)).collect(),
        kernel,
        cokernel,
        range,
        gap_ratio,
        warning,
    }
}

/// Singular values (descending, padded length `cols`) and the full `cols x cols`
/// matrix of right singular vectors.
fn right_svd(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let padded = if rows >= cols {
        m.clone()
    } else {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    (sigma, v_t.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_matrix;

    #[test]
    fn identity_has_full_rank() {
        let rk = rank_kernel(&CMatrix::identity(2, 2), 1e-10);
        assert_eq!(rk.rank, 2);
        assert_eq!(rk.kernel.dim(), 0);
        assert_eq!(rk.cokernel.dim(), 0);
        assert!(rk.warning.is_none());
    }

    #[test]
    fn zero_matrix_is_all_kernel() {
        let rk = rank_kernel(&CMatrix::zeros(2, 3), 1e-10);
        assert_eq!(rk.rank, 0);
        assert_eq!(rk.kernel.dim(), 3);
        assert_eq!(rk.cokernel.dim(), 2);
        assert_eq!(rk.range.dim(), 0);
    }

    #[test]
    fn single_entry_matrix() {
        let m = real_matrix(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        let rk = rank_kernel(&m, 1e-10);
        assert_eq!(rk.singular_values, vec![1.0, 0.0]);
        assert_eq!(rk.rank, 1);
        assert_eq!(rk.kernel.dim(), 2);
        assert_eq!(rk.cokernel.dim(), 1);
        // kernel is span(e2, e3), cokernel span(e2)
        let k = rk.kernel.basis();
        assert!(k.row(0).iter().all(|z| z.norm() < 1e-14));
        let c = rk.cokernel.basis();
        assert!(c[(0, 0)].norm() < 1e-14);
    }

    #[test]
    fn kernel_is_annihilated() {
        let m = real_matrix(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        let rk = rank_kernel(&m, 1e-10);
        assert_eq!(rk.rank, 1);
        assert!(crate::linalg::max_abs(&(&m * rk.kernel.basis())) < 1e-13);
        assert!(crate::linalg::max_abs(&(m.adjoint() * rk.cokernel.basis())) < 1e-13);
        assert!(rk.kernel.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn close_singular_values_warn() {
        let m = real_matrix(&[&[1.0, 0.0], &[0.0, 1e-11]]);
        let rk = rank_kernel(&m, 1e-10);
        assert_eq!(rk.rank, 1);
        assert!(rk.warning.is_none(), "gap 1e11 is well determined");
        let m = real_matrix(&[&[1e-9, 0.0], &[0.0, 1e-11]]);
        let rk = rank_kernel(&m, 1e-1);
        assert_eq!(rk.rank, 1);
        assert!(rk.warning.is_some());
    }

    #[test]
    fn tall_and_empty_shapes() {
        let m = real_matrix(&[&[1.0], &[1.0], &[0.0]]);
        let rk = rank_kernel(&m, 1e-10);
        assert_eq!((rk.rank, rk.kernel.dim(), rk.cokernel.dim()), (1, 0, 2));
        let e = CMatrix::zeros(3, 0);
        let rk = rank_kernel(&e, 1e-10);
        assert_eq!((rk.rank, rk.kernel.dim(), rk.cokernel.dim()), (0, 0, 3));
    }
}
