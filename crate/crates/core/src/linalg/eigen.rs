use std::ops::Bound;

use nalgebra::SymmetricEigen;

use super::{matrix_hash, CMatrix, HermitianMatrix, Subspace, C64};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Columns selected by `mask`, as an orthonormal basis.
    fn columns(&self, mask: &[bool]) -> Subspace {
        let idx: Vec<usize> = (0..self.dim()).filter(|&j| mask[j]).collect();
        let basis = self.eigenvectors.select_columns(idx.iter());
        Subspace::from_orthonormal_unchecked(basis)
    }

    /// `V diag(f(λ)) V*`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let w = f(l);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= w;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }

    /// Number of eigenvalues `λ` with `0 <= snap(λ) < level`.
    pub fn count_in_zero_to(&self, level: f64, tol: &Tolerances) -> usize {
        self.eigenvalues
            .iter()
            .map(|&l| tol.snap(l))
            .filter(|&l| l >= 0.0 && l < level)
            .count()
    }

    /// Number of eigenvalues that are negative after zero-snapping.
    pub fn count_negative(&self, tol: &Tolerances) -> usize {
        self.eigenvalues
            .iter()
            .filter(|&&l| tol.snap(l) < 0.0)
            .count()
    }
}

/// Hermitian eigendecomposition with deterministic output.
///
/// Eigenvalues are sorted ascending. Inside a numerically degenerate cluster
/// the eigenvectors are replaced by a canonical basis of the cluster's
/// eigenspace (pivoted Gram-Schmidt on the columns of its projector) so the
/// result does not depend on the solver's internal rotation. Every
/// eigenvector is phase-fixed: its first non-negligible component is real
/// and positive.
pub fn eigh(h: &HermitianMatrix) -> Result<SpectralData> {
    let n = h.dim();
    if n == 0 {
        return Ok(SpectralData {
            eigenvalues: Vec::new(),
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }
    let m = h.as_matrix();
    let eig =
        SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000 * n.max(1)).ok_or_else(|| {
            Error::EigenFailure {
                hash: matrix_hash(m),
            }
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = eig.eigenvectors.select_columns(order.iter());

    let scale = 1.0 + eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()));
    let cluster_tol = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eigenvalues[end] - eigenvalues[end - 1] <= cluster_tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_cluster(&mut vectors, start, end);
        }
        start = end;
    }
    for j in 0..n {
        fix_phase(&mut vectors, j);
    }
    Ok(SpectralData {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let n = h.dim();
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = h.as_matrix();
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000 * n).ok_or_else(|| {
        Error::EigenFailure {
            hash: matrix_hash(m),
        }
    })?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

fn canonicalize_cluster(vectors: &mut CMatrix, start: usize, end: usize) {
    let n = vectors.nrows();
    let k = end - start;
    let block = vectors.columns(start, k).into_owned();
    let proj = &block * block.adjoint();
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        let mut best: Option<(usize, nalgebra::DVector<C64>, f64)> = None;
        for (j, _) in used.iter().enumerate().filter(|(_, &u)| !u) {
            let mut r = proj.column(j).into_owned();
            for q in &basis {
                let c = q.dotc(&r);
                r -= q * c;
            }
            let norm = r.norm();
            let better = match &best {
                None => true,
                Some((_, _, b)) => norm > *b * (1.0 + 1e-8),
            };
            if better {
                best = Some((j, r, norm));
            }
        }
        let (j, r, norm) = best.expect("cluster larger than ambient dimension");
        used[j] = true;
        basis.push(r / C64::new(norm, 0.0));
    }
    for (i, q) in basis.into_iter().enumerate() {
        vectors.set_column(start + i, &q);
    }
}

fn fix_phase(vectors: &mut CMatrix, j: usize) {
    let col = vectors.column(j);
    let peak = col.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    let lead = col
        .iter()
        .find(|z| z.norm() > 1e-8 * peak.max(f64::MIN_POSITIVE));
    if let Some(&z) = lead {
        let phase = z.conj() / z.norm();
        for v in vectors.column_mut(j).iter_mut() {
            *v *= phase;
        }
    }
}

/// A real interval with open, closed or infinite endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: Bound<f64>,
    pub upper: Bound<f64>,
}

impl Interval {
    /// `(-inf, 0)`.
    pub fn negative() -> Self {
        Interval {
            lower: Bound::Unbounded,
            upper: Bound::Excluded(0.0),
        }
    }

    /// `[0, inf)`.
    pub fn nonnegative() -> Self {
        Interval {
            lower: Bound::Included(0.0),
            upper: Bound::Unbounded,
        }
    }

    /// `{0}`, i.e. the (snapped) kernel.
    pub fn zero() -> Self {
        Interval {
            lower: Bound::Included(0.0),
            upper: Bound::Included(0.0),
        }
    }

    /// `(-inf, a)`.
    pub fn below(a: f64) -> Self {
        Interval {
            lower: Bound::Unbounded,
            upper: Bound::Excluded(a),
        }
    }

    /// `[0, a)`.
    pub fn zero_to(a: f64) -> Self {
        Interval {
            lower: Bound::Included(0.0),
            upper: Bound::Excluded(a),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let lower_ok = match self.lower {
            Bound::Unbounded => true,
            Bound::Included(l) => x >= l,
            Bound::Excluded(l) => x > l,
        };
        let upper_ok = match self.upper {
            Bound::Unbounded => true,
            Bound::Included(u) => x <= u,
            Bound::Excluded(u) => x < u,
        };
        lower_ok && upper_ok
    }

    fn finite_endpoints(&self) -> impl Iterator<Item = f64> {
        let l = match self.lower {
            Bound::Included(x) | Bound::Excluded(x) => Some(x),
            Bound::Unbounded => None,
        };
        let u = match self.upper {
            Bound::Included(x) | Bound::Excluded(x) => Some(x),
            Bound::Unbounded => None,
        };
        l.into_iter().chain(u)
    }
}

/// An orthogonal projection together with an orthonormal basis of its range.
#[derive(Clone, Debug)]
pub struct Projection {
    matrix: HermitianMatrix,
    rank: usize,
    range: Subspace,
}

impl Projection {
    pub fn onto(range: Subspace) -> Self {
        let b = range.basis();
        let matrix = HermitianMatrix::from_hermitian_part(b * b.adjoint());
        Projection {
            rank: range.dim(),
            matrix,
            range,
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn range(&self) -> &Subspace {
        &self.range
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `U* P U`, the projection onto `U* Ran(P)`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Projection::onto(self.range.transformed(&u.adjoint()))
    }

    /// `(|P^2 - P|, |P* - P|, |trace P - rank|)` in max-entry norm.
    pub fn defects(&self) -> (f64, f64, f64) {
        let p = self.matrix.as_matrix();
        let idem = super::max_abs(&(p * p - p));
        let herm = super::max_abs(&(p - p.adjoint()));
        let trace = p.trace().re;
        (idem, herm, (trace - self.rank as f64).abs())
    }
}

/// `χ_I(H)` from a spectral decomposition.
///
/// Eigenvalues are zero-snapped with `tol.tau_0` before classification, so a
/// snapped zero belongs to `[0, ∞)` and not to `(-∞, 0)`. An eigenvalue lying
/// within `tol.tau_gap` of a finite endpoint, other than a snapped zero at a
/// zero endpoint, is reported as an ambiguous cut.
pub fn spectral_projection(
    spectrum: &SpectralData,
    interval: &Interval,
    tol: &Tolerances,
) -> Result<Projection> {
    let mut mask = vec![false; spectrum.dim()];
    for (j, &lambda) in spectrum.eigenvalues.iter().enumerate() {
        let s = tol.snap(lambda);
        for e in interval.finite_endpoints() {
            let snapped_zero = e == 0.0 && s == 0.0;
            if !snapped_zero && (s - e).abs() < tol.tau_gap {
                return Err(Error::AmbiguousCut {
                    eigenvalue: lambda,
                    endpoint: e,
                    gap: tol.tau_gap,
                });
            }
        }
        mask[j] = interval.contains(s);
    }
    let range = spectrum.columns(&mask);
    Ok(Projection::onto(range))
}

/// `exp(i s H)`, unitary up to the orthonormality of the eigenbasis.
pub fn exp_i_hermitian(h: &HermitianMatrix, s: f64) -> Result<CMatrix> {
    let sd = eigh(h)?;
    Ok(sd.map_eigenvalues(|l| C64::from_polar(1.0, s * l)))
}

/// `exp(s H)` for real `s`.
pub fn exp_hermitian(h: &HermitianMatrix, s: f64) -> Result<CMatrix> {
    let sd = eigh(h)?;
    Ok(sd.map_eigenvalues(|l| C64::new((s * l).exp(), 0.0)))
}
