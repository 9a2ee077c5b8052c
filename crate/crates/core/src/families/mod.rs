//! Hermitian operator families `t ↦ A(t)` on `[0, T]` and their constructors.

mod builders;
mod profile;
mod samples;
mod spec;

pub use builders::{
    constant_family, counterexample_family, counterexample_family_with, diagonal_path_family,
    endpoint_regularize, linear_family, random_hermitian, random_smooth_family, swap_block_family,
    swap_block_family_with, swap_block_matrix,
};
pub use profile::{PlateauBump, SwapProfile};
pub use samples::{
    read_samples_csv, read_samples_json, sampled_family, write_samples_csv, write_samples_json,
    MatrixSample,
};
pub use spec::{FamilySpec, MatrixSpec};

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix, C64};

pub type MatrixFn = Arc<dyn Fn(f64) -> HermitianMatrix + Send + Sync>;
pub type UnitaryFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// Construction-time behaviour.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FamilyOptions {
    /// Turn construction warnings (derivative mismatch, piecewise regularity)
    /// into errors.
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    /// Continuously differentiable in `t`.
    Smooth,
    /// Only piecewise `C¹` (sampled data); the evolution operator is then a
    /// product of smooth pieces.
    PiecewiseC1,
}

/// Step used by the derivative consistency check.
pub const DERIVATIVE_CHECK_STEP: f64 = 1e-4;
const DERIVATIVE_CHECK_POINTS: usize = 9;
const CURVATURE_GRID: usize = 64;

/// A Hermitian-matrix-valued function of time on `[0, T]`.
///
/// Families are immutable and cheap to clone (the evaluation closures are
/// shared).
#[derive(Clone)]
pub struct OperatorFamily {
    dim: usize,
    horizon: f64,
    label: String,
    eval: MatrixFn,
    derivative: Option<MatrixFn>,
    regularity: Regularity,
    warnings: Vec<String>,
}

impl fmt::Debug for OperatorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorFamily")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("has_derivative", &self.derivative.is_some())
            .field("regularity", &self.regularity)
            .finish()
    }
}

impl OperatorFamily {
    /// Build a family and run the construction check: the symmetric finite
    /// difference with step `1e-4` must match the supplied derivative within
    /// `C h²` (plus a roundoff floor), where `C = 10 max |A''|` is estimated
    /// from second differences on a grid of step `T/64`.
    pub fn new(
        dim: usize,
        horizon: f64,
        label: impl Into<String>,
        eval: MatrixFn,
        derivative: Option<MatrixFn>,
        options: FamilyOptions,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be positive"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(
                "horizon",
                format!("must be positive, got {horizon}"),
            ));
        }
        let probe = eval(0.0);
        if probe.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: probe.dim(),
            });
        }
        let mut family = OperatorFamily {
            dim,
            horizon,
            label: label.into(),
            eval,
            derivative,
            regularity: Regularity::Smooth,
            warnings: Vec::new(),
        };
        family.check_derivative(options)?;
        Ok(family)
    }

    /// Families derived from already-checked ones (restrictions, conjugations,
    /// evolved families) skip the finite-difference check.
    pub(crate) fn derived(
        dim: usize,
        horizon: f64,
        label: String,
        eval: MatrixFn,
        derivative: Option<MatrixFn>,
        regularity: Regularity,
    ) -> Self {
        OperatorFamily {
            dim,
            horizon,
            label,
            eval,
            derivative,
            regularity,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn mark_piecewise(&mut self, options: FamilyOptions) -> Result<()> {
        self.regularity = Regularity::PiecewiseC1;
        let msg = "family is only piecewise C1; the evolution operator is assembled piece by piece"
            .to_string();
        if options.strict {
            return Err(Error::invalid("family", msg));
        }
        self.warnings.push(msg);
        Ok(())
    }

    fn check_derivative(&mut self, options: FamilyOptions) -> Result<()> {
        let Some(deriv) = self.derivative.clone() else {
            return Ok(());
        };
        let h =
            DERIVATIVE_CHECK_STEP.min(self.horizon / (4.0 * (DERIVATIVE_CHECK_POINTS + 1) as f64));
        let points: Vec<f64> = (1..=DERIVATIVE_CHECK_POINTS)
            .map(|j| self.horizon * j as f64 / (DERIVATIVE_CHECK_POINTS + 1) as f64)
            .collect();
        let mut records = Vec::with_capacity(points.len());
        for &t in &points {
            let fd = (self.eval(t + h).as_matrix() - self.eval(t - h).as_matrix())
                / C64::new(2.0 * h, 0.0);
            let mismatch = (fd - deriv(t).as_matrix()).norm();
            records.push((t, mismatch, self.eval(t).as_matrix().norm()));
        }
        // |A''| from second differences on a uniform grid of step T/64.
        let coarse = self.horizon / CURVATURE_GRID as f64;
        let nodes: Vec<CMatrix> = (0..=CURVATURE_GRID)
            .map(|k| self.eval(coarse * k as f64).into_matrix())
            .collect();
        let max_second = nodes
            .windows(3)
            .map(|w| (&w[0] - &w[1] * C64::new(2.0, 0.0) + &w[2]).norm() / (coarse * coarse))
            .fold(0.0_f64, f64::max);
        let c = 10.0 * max_second;
        for (t, mismatch, scale) in records {
            let tolerance = c * h * h + 1e-7 * (1.0 + scale);
            if mismatch > tolerance {
                if options.strict {
                    return Err(Error::DerivativeMismatch {
                        t,
                        mismatch,
                        tolerance,
                    });
                }
                let msg = format!(
                    "derivative mismatch at t = {t}: finite difference differs by {mismatch:.3e} (> {tolerance:.3e})"
                );
                log::warn!("{}: {msg}", self.label);
                self.warnings.push(msg);
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `A(t)`; `t` is clamped into `[0, T]`.
    pub fn eval(&self, t: f64) -> HermitianMatrix {
        (self.eval)(t.clamp(0.0, self.horizon))
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `A'(t)` when the family carries a closed-form derivative.
    pub fn derivative(&self, t: f64) -> Option<HermitianMatrix> {
        self.derivative
            .as_ref()
            .map(|d| d(t.clamp(0.0, self.horizon)))
    }

    /// `s ↦ A(start + s)` on `[0, end - start]`.
    pub fn restrict(&self, start: f64, end: f64) -> Result<Self> {
        if !(0.0 <= start && start < end && end <= self.horizon * (1.0 + 1e-12)) {
            return Err(Error::invalid(
                "restriction",
                format!(
                    "[{start}, {end}] is not a subinterval of [0, {}]",
                    self.horizon
                ),
            ));
        }
        let end = end.min(self.horizon);
        let base = self.clone();
        let eval: MatrixFn = Arc::new(move |s| base.eval(start + s));
        let derivative = self.derivative.as_ref().map(|_| {
            let base = self.clone();
            Arc::new(move |s: f64| base.derivative(start + s).expect("derivative present"))
                as MatrixFn
        });
        Ok(OperatorFamily::derived(
            self.dim,
            end - start,
            format!("{}|[{start},{end}]", self.label),
            eval,
            derivative,
            self.regularity,
        ))
    }

    /// `s ↦ A(T - s)`.
    pub fn reversed(&self) -> Self {
        let horizon = self.horizon;
        let base = self.clone();
        let eval: MatrixFn = Arc::new(move |s| base.eval(horizon - s));
        let derivative = self.derivative.as_ref().map(|_| {
            let base = self.clone();
            Arc::new(move |s: f64| {
                base.derivative(horizon - s)
                    .expect("derivative present")
                    .scaled(-1.0)
            }) as MatrixFn
        });
        OperatorFamily::derived(
            self.dim,
            horizon,
            format!("reversed({})", self.label),
            eval,
            derivative,
            self.regularity,
        )
    }

    /// `t ↦ U(t)* A(t) U(t)`. No derivative is carried because `U'` is not
    /// known.
    pub fn conjugated(&self, u: UnitaryFn) -> Self {
        let base = self.clone();
        let eval: MatrixFn = Arc::new(move |t| base.eval(t).conjugate_by(&u(t)));
        OperatorFamily::derived(
            self.dim,
            self.horizon,
            format!("conjugated({})", self.label),
            eval,
            None,
            self.regularity,
        )
    }

    /// `max |A(t)|` (spectral norm) over `samples + 1` uniform points.
    pub fn sampled_max_norm(&self, samples: usize) -> f64 {
        let samples = samples.max(1);
        (0..=samples)
            .map(|k| self.eval(self.horizon * k as f64 / samples as f64).norm())
            .fold(0.0, f64::max)
    }

    /// `max_t |A(t)| · T` over a uniform sample, the stiffness measure of the
    /// Riemannian problem.
    pub fn stiffness(&self, samples: usize) -> f64 {
        self.sampled_max_norm(samples) * self.horizon
    }
}
