use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Sub};

use super::{CMatrix, C64};
use crate::error::{Error, Result};

/// A square complex matrix equal to its conjugate transpose.
///
/// Inputs are accepted when their anti-Hermitian part is below
/// [`HermitianMatrix::TOLERANCE`] (relative to the largest entry) and are
/// then symmetrized, so the stored entries satisfy `a_jk = conj(a_kj)`
/// exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    entries: CMatrix,
}

impl HermitianMatrix {
    pub const TOLERANCE: f64 = 1e-12;

    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = super::max_abs(&m).max(1.0);
        let deviation = super::max_abs(&(&m - m.adjoint()));
        let tolerance = Self::TOLERANCE * scale;
        if deviation > tolerance {
            return Err(Error::NotHermitian {
                deviation,
                tolerance,
            });
        }
        Ok(Self::from_hermitian_part(m))
    }

    /// `(m + m*) / 2` without any tolerance check. Used for matrices that are
    /// Hermitian analytically but carry roundoff, e.g. `U* A U`.
    pub fn from_hermitian_part(m: CMatrix) -> Self {
        assert_eq!(
            m.nrows(),
            m.ncols(),
            "Hermitian part of a non-square matrix"
        );
        let n = m.nrows();
        let mut entries = m;
        for j in 0..n {
            entries[(j, j)] = C64::new(entries[(j, j)].re, 0.0);
            for k in (j + 1)..n {
                let avg = (entries[(j, k)] + entries[(k, j)].conj()) * 0.5;
                entries[(j, k)] = avg;
                entries[(k, j)] = avg.conj();
            }
        }
        HermitianMatrix { entries }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let entries = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        HermitianMatrix { entries }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(super::real_matrix(rows))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            entries: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix {
            entries: CMatrix::identity(n, n),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn as_matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// `U* H U` for a square `U`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self::from_hermitian_part(u.adjoint() * &self.entries * u)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        HermitianMatrix {
            entries: &self.entries * C64::new(factor, 0.0),
        }
    }

    /// Spectral norm, i.e. the largest absolute eigenvalue.
    pub fn norm(&self) -> f64 {
        super::eigvalsh(self)
            .map(|ev| ev.iter().fold(0.0_f64, |acc, l| acc.max(l.abs())))
            .unwrap_or_else(|_| super::spectral_norm(&self.entries))
    }

    /// Embed `block` on the diagonal at `offset`.
    pub fn set_block(&mut self, offset: usize, block: &HermitianMatrix) {
        let k = block.dim();
        self.entries
            .view_mut((offset, offset), (k, k))
            .copy_from(&block.entries);
    }

    pub fn block_diagonal(blocks: &[HermitianMatrix]) -> Self {
        let n = blocks.iter().map(HermitianMatrix::dim).sum();
        let mut out = HermitianMatrix::zeros(n);
        let mut offset = 0;
        for b in blocks {
            out.set_block(offset, b);
            offset += b.dim();
        }
        out
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            entries: &self.entries - &rhs.entries,
        }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scaled(rhs)
    }
}

/// Stable hash of the bit patterns of a matrix, used to identify offending
/// inputs in error messages.
pub fn matrix_hash(m: &CMatrix) -> u64 {
    let mut hasher = DefaultHasher::new();
    m.nrows().hash(&mut hasher);
    m.ncols().hash(&mut hasher);
    for z in m.iter() {
        z.re.to_bits().hash(&mut hasher);
        z.im.to_bits().hash(&mut hasher);
    }
    hasher.finish()
}
