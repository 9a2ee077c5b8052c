use super::{rank_kernel, CMatrix, Projection};
use crate::error::{Error, Result};
use crate::index::{IndexDiagnostics, IndexMethod, IndexReport};
use crate::tolerance::Tolerances;

/// A subspace of `C^n` stored through an orthonormal basis (possibly empty).
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-10;

    pub fn new(basis: CMatrix) -> Result<Self> {
        let s = Subspace { basis };
        let defect = s.orthonormality_defect();
        if defect > Self::ORTHONORMALITY_TOLERANCE {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(s)
    }

    pub(crate) fn from_orthonormal_unchecked(basis: CMatrix) -> Self {
        Subspace { basis }
    }

    pub fn empty(ambient_dim: usize) -> Self {
        Subspace {
            basis: CMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: CMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// `span(e_i : i in indices)`.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut basis = CMatrix::zeros(ambient_dim, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            basis[(i, col)] = super::C64::new(1.0, 0.0);
        }
        Subspace { basis }
    }

    /// Orthonormal basis of the column span of an arbitrary matrix, with
    /// numerical rank decided relative to its largest singular value.
    pub fn span(columns: &CMatrix, tau_relative: f64) -> Self {
        rank_kernel(columns, tau_relative).range
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    #[inline]
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn projection(&self) -> Projection {
        Projection::onto(self.clone())
    }

    pub fn orthogonal_complement(&self) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(self.ambient_dim());
        }
        let rk = rank_kernel(&self.basis.adjoint(), 1e-10);
        rk.kernel
    }

    /// `U · S` for a unitary `U`.
    pub fn transformed(&self, u: &CMatrix) -> Subspace {
        Subspace {
            basis: u * &self.basis,
        }
    }

    /// `|B* B - I|` in max-entry norm.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        if k == 0 {
            return 0.0;
        }
        let gram = self.basis.adjoint() * &self.basis - CMatrix::identity(k, k);
        super::max_abs(&gram)
    }

    fn check_same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: other.ambient_dim(),
            });
        }
        Ok(())
    }
}

/// Cosines of the principal angles between two subspaces, descending.
pub fn principal_cosines(u: &Subspace, v: &Subspace) -> Result<Vec<f64>> {
    u.check_same_ambient(v)?;
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Vec::new());
    }
    let m = u.basis().adjoint() * v.basis();
    Ok(m.svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect())
}

/// `U ∩ V` via principal angles: the directions of `U` whose principal
/// cosine with `V` is at least `1 - tau_angle`.
pub fn subspace_intersection(u: &Subspace, v: &Subspace, tau_angle: f64) -> Result<Subspace> {
    u.check_same_ambient(v)?;
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Subspace::empty(u.ambient_dim()));
    }
    let m = u.basis().adjoint() * v.basis();
    let svd = m.svd(true, false);
    let left = svd.u.expect("left singular vectors requested");
    let count = svd
        .singular_values
        .iter()
        .take_while(|&&c| c >= 1.0 - tau_angle)
        .count();
    let basis = u.basis() * left.columns(0, count);
    Ok(Subspace::from_orthonormal_unchecked(basis))
}

/// Relative index of a pair of projections: the index of
/// `Q|: Ran P -> Ran Q`.
///
/// The restriction is represented by `W_Q* U_P` for orthonormal bases of the
/// two ranges; its numerical rank (singular values `> tol.tau_rank`, absolute
/// because the matrix has norm at most one) gives `ker = rank P - r` and
/// `coker = rank Q - r`. In finite dimensions the index always equals
/// `rank P - rank Q`, which is asserted.
pub fn relative_index(p: &Projection, q: &Projection, tol: &Tolerances) -> Result<IndexReport> {
    if p.ambient_dim() != q.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: p.ambient_dim(),
            found: q.ambient_dim(),
        });
    }
    let (kp, kq) = (p.rank(), q.rank());
    let singular_values: Vec<f64> = if kp == 0 || kq == 0 {
        Vec::new()
    } else {
        let m = q.range().basis().adjoint() * p.range().basis();
        m.svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect()
    };
    let r = singular_values
        .iter()
        .filter(|&&s| s > tol.tau_rank)
        .count();
    let report = IndexReport::new(
        kp - r,
        kq - r,
        IndexMethod::ProjectionPair,
        IndexDiagnostics {
            singular_values,
            ..Default::default()
        },
    );
    assert_eq!(
        report.index,
        kp as i64 - kq as i64,
        "relative index must equal rank P - rank Q in finite dimensions"
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, spectral_projection, HermitianMatrix, Interval};

    fn diag_projection(d: &[f64]) -> Projection {
        let idx: Vec<usize> = d
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 1.0)
            .map(|(i, _)| i)
            .collect();
        Subspace::coordinate(d.len(), &idx).projection()
    }

    #[test]
    fn equal_projections_have_index_zero() {
        let h = HermitianMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.3]]).unwrap();
        let p = spectral_projection(
            &eigh(&h).unwrap(),
            &Interval::negative(),
            &Tolerances::default(),
        )
        .unwrap();
        let r = relative_index(&p, &p, &Tolerances::default()).unwrap();
        assert_eq!(r.triple(), (0, 0, 0));
    }

    #[test]
    fn identity_against_rank_one() {
        let p = diag_projection(&[1.0, 1.0]);
        let q = diag_projection(&[1.0, 0.0]);
        let r = relative_index(&p, &q, &Tolerances::default()).unwrap();
        assert_eq!(r.triple(), (1, 0, 1));
    }

    #[test]
    fn orthogonal_lines_give_zero_map() {
        let p = diag_projection(&[1.0, 0.0]);
        let q = diag_projection(&[0.0, 1.0]);
        let r = relative_index(&p, &q, &Tolerances::default()).unwrap();
        assert_eq!(r.triple(), (1, 1, 0));
        let back = relative_index(&q, &p, &Tolerances::default()).unwrap();
        assert_eq!(back.index, -r.index);
    }

    #[test]
    fn mismatched_dimensions_error() {
        let p = diag_projection(&[1.0, 0.0]);
        let q = diag_projection(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            relative_index(&p, &q, &Tolerances::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn intersection_examples() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert_eq!(subspace_intersection(&e1, &e1, 1e-9).unwrap().dim(), 1);
        assert_eq!(subspace_intersection(&e1, &e2, 1e-9).unwrap().dim(), 0);

        let u = Subspace::coordinate(3, &[0, 1]);
        let v = Subspace::coordinate(3, &[1, 2]);
        let w = subspace_intersection(&u, &v, 1e-9).unwrap();
        assert_eq!(w.dim(), 1);
        assert!((w.basis()[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert_eq!(subspace_intersection(&v, &u, 1e-9).unwrap().dim(), 1);
    }

    #[test]
    fn empty_subspaces_are_first_class() {
        let e = Subspace::empty(3);
        let f = Subspace::full(3);
        assert_eq!(subspace_intersection(&e, &f, 1e-9).unwrap().dim(), 0);
        assert_eq!(e.orthogonal_complement().dim(), 3);
        assert_eq!(f.orthogonal_complement().dim(), 0);
        let r = relative_index(&e.projection(), &f.projection(), &Tolerances::default()).unwrap();
        assert_eq!(r.triple(), (0, 3, -3));
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let b = crate::linalg::real_matrix(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(
            Subspace::new(b),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn span_orthonormalizes() {
        let b = crate::linalg::real_matrix(&[&[1.0, 1.0, 2.0], &[0.0, 1.0, 1.0], &[0.0, 0.0, 0.0]]);
        let s = Subspace::span(&b, 1e-10);
        assert_eq!(s.dim(), 2);
        assert!(s.orthonormality_defect() < 1e-12);
    }
}
