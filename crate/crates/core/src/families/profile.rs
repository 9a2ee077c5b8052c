//! Scalar profiles used by the family constructors: the rotation angle of the
//! swap blocks and the smooth plateau cut-off of the endpoint perturbation.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// Rotation-angle profile `φ` of a swap block: `φ(0) = 0`, `φ(1) = π/2`,
/// `φ'(0) = φ'(1) = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwapProfile {
    /// `φ(t) = (π/2)(6t⁵ - 15t⁴ + 10t³)`, with `max |φ'| = 15π/16`.
    #[default]
    Quintic,
    /// Trapezoidal `φ'` with quintic ramps of width 1/5; `max |φ'| < 2`.
    BoundedSlope,
}

const RAMP: f64 = 0.2;

impl SwapProfile {
    /// Empty for the default profile.
    pub fn label_suffix(self) -> &'static str {
        match self {
            SwapProfile::Quintic => "",
            SwapProfile::BoundedSlope => ",bounded-slope",
        }
    }

    /// The bounded-slope profile joins its ramps with only `C²` contact, which
    /// caps the convergence order of any step scheme at non-aligned grids.
    pub fn is_smooth(self) -> bool {
        self == SwapProfile::Quintic
    }

    /// Height of the plateau of `φ'` for the bounded-slope profile.
    fn plateau() -> f64 {
        FRAC_PI_2 / (1.0 - RAMP)
    }

    pub fn phi(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            SwapProfile::Quintic => FRAC_PI_2 * t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
            SwapProfile::BoundedSlope => {
                let p = Self::plateau();
                let rise = |s: f64| {
                    let x = s / RAMP;
                    p * RAMP * x * x * x * x * (2.5 + x * (-3.0 + x))
                };
                if t <= RAMP {
                    rise(t)
                } else if t <= 1.0 - RAMP {
                    0.5 * p * RAMP + p * (t - RAMP)
                } else {
                    FRAC_PI_2 - rise(1.0 - t)
                }
            }
        }
    }

    pub fn dphi(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            SwapProfile::Quintic => 15.0 * PI * t * t * (1.0 - t) * (1.0 - t),
            SwapProfile::BoundedSlope => {
                let p = Self::plateau();
                let ramp = |s: f64| {
                    let x = s / RAMP;
                    p * x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
                };
                if t <= RAMP {
                    ramp(t)
                } else if t <= 1.0 - RAMP {
                    p
                } else {
                    ramp(1.0 - t)
                }
            }
        }
    }

    pub fn ddphi(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            SwapProfile::Quintic => 30.0 * PI * t * (1.0 - t) * (1.0 - 2.0 * t),
            SwapProfile::BoundedSlope => {
                let p = Self::plateau();
                let slope = |s: f64| {
                    let x = s / RAMP;
                    p / RAMP * 30.0 * x * x * (1.0 - x) * (1.0 - x)
                };
                if t <= RAMP {
                    slope(t)
                } else if t <= 1.0 - RAMP {
                    0.0
                } else {
                    -slope(1.0 - t)
                }
            }
        }
    }

    /// `max_t |φ'(t)|`.
    pub fn max_slope(self) -> f64 {
        match self {
            SwapProfile::Quintic => 15.0 * PI / 16.0,
            SwapProfile::BoundedSlope => Self::plateau(),
        }
    }
}

/// Smooth cut-off `χ` with `χ ≡ 1` on `[0, width/3]` and `χ ≡ 0` on
/// `[width, ∞)`, built from the `exp(-1/x)` transition function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlateauBump {
    width: f64,
}

impl PlateauBump {
    pub fn new(width: f64) -> Self {
        assert!(width > 0.0, "bump width must be positive");
        PlateauBump { width }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    fn flat(&self) -> f64 {
        self.width / 3.0
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.flat() {
            1.0
        } else if t >= self.width {
            0.0
        } else {
            1.0 - smooth_transition((t - self.flat()) / (self.width - self.flat()))
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= self.flat() || t >= self.width {
            0.0
        } else {
            let len = self.width - self.flat();
            -smooth_transition_derivative((t - self.flat()) / len) / len
        }
    }
}

fn psi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn dpsi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        psi(x) / (x * x)
    }
}

/// `ψ(x) / (ψ(x) + ψ(1 - x))`, rising smoothly from 0 to 1 on `[0, 1]`.
fn smooth_transition(x: f64) -> f64 {
    let a = psi(x);
    let b = psi(1.0 - x);
    a / (a + b)
}

fn smooth_transition_derivative(x: f64) -> f64 {
    let a = psi(x);
    let b = psi(1.0 - x);
    let da = dpsi(x);
    let db = -dpsi(1.0 - x);
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}
