use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every computation path.
///
/// All values are echoed verbatim into reports so that a result can be traced
/// back to the thresholds that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Eigenvalues with `|λ| <= tau_0` are treated as exactly zero, which
    /// counts as nonnegative.
    pub tau_0: f64,
    /// Eigenvalues closer than this to a finite cut (other than a snapped
    /// zero) make a spectral projection ambiguous.
    pub tau_gap: f64,
    /// Absolute singular-value threshold for restrictions between projection
    /// ranges (these matrices have norm at most one).
    pub tau_rank: f64,
    /// Relative singular-value threshold used by general rank computations.
    pub tau_rank_relative: f64,
    /// Principal-angle cosines `>= 1 - tau_angle` count as intersecting.
    pub tau_angle: f64,
    /// Minimal clearance between a flow-partition level and the spectrum.
    pub gamma_min: f64,
    /// Accepted unitarity defect of propagators and conjugating matrices.
    pub unitarity: f64,
    /// Accepted cocycle defect `|Q(t,s)Q(s,r) - Q(t,r)|`.
    pub cocycle: f64,
    /// Accepted change of norm under a propagator.
    pub isometry: f64,
    /// Accepted deviation between the spectra of conjugate families.
    pub spectrum_match: f64,
    /// Accepted deviation of the homogeneous Cauchy solution from `Q(t,s) x`.
    pub cauchy_match: f64,
    /// Accepted deviation of a propagator from a closed form.
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tau_0: 1e-9,
            tau_gap: 1e-7,
            tau_rank: 1e-8,
            tau_rank_relative: 1e-10,
            tau_angle: 1e-9,
            gamma_min: 1e-6,
            unitarity: 1e-10,
            cocycle: 1e-9,
            isometry: 1e-10,
            spectrum_match: 1e-10,
            cauchy_match: 1e-9,
            closed_form: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tau_0", self.tau_0),
            ("tau_gap", self.tau_gap),
            ("tau_rank", self.tau_rank),
            ("tau_rank_relative", self.tau_rank_relative),
            ("tau_angle", self.tau_angle),
            ("gamma_min", self.gamma_min),
            ("unitarity", self.unitarity),
            ("cocycle", self.cocycle),
            ("isometry", self.isometry),
            ("spectrum_match", self.spectrum_match),
            ("cauchy_match", self.cauchy_match),
            ("closed_form", self.closed_form),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config {
                    field: format!("tolerances.{name}"),
                    message: format!("must be a positive finite number, got {value}"),
                });
            }
        }
        if self.tau_angle >= 1.0 {
            return Err(Error::Config {
                field: "tolerances.tau_angle".into(),
                message: "must be smaller than 1".into(),
            });
        }
        Ok(())
    }

    /// Snap an eigenvalue onto zero when it lies inside the zero band.
    #[inline]
    pub fn snap(&self, lambda: f64) -> f64 {
        if lambda.abs() <= self.tau_0 {
            0.0
        } else {
            lambda
        }
    }
}
