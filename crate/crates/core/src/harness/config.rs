//! TOML experiment configs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aps::{BvpSolver, RiemannianOptions, ShootingGrid};
use crate::error::{Error, Result};
use crate::evolution::StepScheme;
use crate::families::{FamilyOptions, FamilySpec, OperatorFamily};
use crate::spectral_flow::FlowOptions;
use crate::tolerance::Tolerances;

/// Checks a run can request, executed in the order given.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Flowind,
    LorentzianMain,
    RiemannianMain,
    CounterexampleGrowth,
    PropagatorConvergence,
    ConjugationInvariance,
    CauchyWellposedness,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Flowind => "flowind",
            CheckKind::LorentzianMain => "lorentzian-main",
            CheckKind::RiemannianMain => "riemannian-main",
            CheckKind::CounterexampleGrowth => "counterexample-growth",
            CheckKind::PropagatorConvergence => "propagator-convergence",
            CheckKind::ConjugationInvariance => "conjugation-invariance",
            CheckKind::CauchyWellposedness => "cauchy-wellposedness",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorConfig {
    /// Total number of steps on `[0, T]`.
    pub steps: usize,
    /// Number of stored grid intervals; must divide `steps`.
    pub intervals: usize,
    pub scheme: StepScheme,
    /// Checkpoints of the Lorentzian equality check.
    pub checkpoints: usize,
    /// Base step count `N` of the Richardson study (`N .. 8N` against `4N .. 32N`).
    pub convergence_base_steps: usize,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig {
            steps: 1024,
            intervals: 64,
            scheme: StepScheme::MidpointExponential,
            checkpoints: 8,
            convergence_base_steps: 16,
        }
    }
}

impl PropagatorConfig {
    pub fn steps_per_interval(&self) -> usize {
        self.steps / self.intervals
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BvpConfig {
    /// Crank-Nicolson slices `M`.
    pub m: usize,
    pub solver: BvpSolver,
    /// Slice counts of the stability sweep.
    pub stability: Vec<usize>,
    pub shooting_intervals: usize,
    pub shooting_steps_per_interval: usize,
    /// Width of the endpoint perturbation as a fraction of `T`.
    pub regularization: f64,
}

impl Default for BvpConfig {
    fn default() -> Self {
        let shooting = ShootingGrid::default();
        BvpConfig {
            m: 64,
            solver: BvpSolver::Auto,
            stability: vec![32, 64, 128],
            shooting_intervals: shooting.intervals,
            shooting_steps_per_interval: shooting.steps_per_interval,
            regularization: crate::aps::DEFAULT_REGULARIZATION,
        }
    }
}

impl BvpConfig {
    pub fn riemannian_options(&self) -> RiemannianOptions {
        RiemannianOptions {
            steps: self.m,
            solver: self.solver,
            shooting: ShootingGrid {
                intervals: self.shooting_intervals,
                steps_per_interval: self.shooting_steps_per_interval,
            },
            regularization: self.regularization,
        }
    }
}

/// Propagation used by the counterexample growth check, separate from the
/// main propagator because the closed-form comparison needs more accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub steps: usize,
    pub intervals: usize,
    pub scheme: StepScheme,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            steps: 4096,
            intervals: 64,
            scheme: StepScheme::FourthOrderCommutatorFree,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchyConfig {
    /// Coarse grid; the refinement doubles it.
    pub intervals: usize,
    pub steps_per_interval: usize,
    /// Accepted window for the residual ratio under grid doubling.
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl Default for CauchyConfig {
    fn default() -> Self {
        CauchyConfig {
            intervals: 32,
            steps_per_interval: 16,
            min_ratio: 3.0,
            max_ratio: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConjugationConfig {
    /// Spectra are compared at `samples + 1` uniform times.
    pub samples: usize,
}

impl Default for ConjugationConfig {
    fn default() -> Self {
        ConjugationConfig { samples: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for reports and traces; stdout when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
    /// Points of the eigenvalue-flow trace.
    pub eigenflow_samples: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            formats: vec![OutputFormat::Json],
            eigenflow_samples: 101,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub seed: u64,
    /// Construction warnings become errors.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub propagator: PropagatorConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub flow: FlowOptions,
    #[serde(default)]
    pub bvp: BvpConfig,
    #[serde(default)]
    pub growth: GrowthConfig,
    #[serde(default)]
    pub cauchy: CauchyConfig,
    #[serde(default)]
    pub conjugation: ConjugationConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line overrides applied before validation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub steps: Option<usize>,
    pub grid: Option<usize>,
    pub strict: bool,
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// A config with default sections.
    pub fn new(family: FamilySpec, checks: Vec<CheckKind>) -> Self {
        ExperimentConfig {
            family,
            checks,
            seed: 0,
            strict: false,
            propagator: PropagatorConfig::default(),
            tolerances: Tolerances::default(),
            flow: FlowOptions::default(),
            bvp: BvpConfig::default(),
            growth: GrowthConfig::default(),
            cauchy: CauchyConfig::default(),
            conjugation: ConjugationConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parse TOML; syntax and schema errors carry the line and field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map_or_else(|| "config".to_string(), |s| line_of(text, s.start));
            config_error(&field, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { field, message } => Error::Config {
                field: format!("{}:{field}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.path = Some(out.clone());
        }
        if let Some(format) = o.format {
            self.output.formats = vec![format];
        }
        if let Some(steps) = o.steps {
            self.propagator.steps = steps;
            if steps % self.propagator.intervals != 0 {
                self.propagator.intervals = gcd(steps, self.propagator.intervals);
            }
        }
        if let Some(m) = o.grid {
            self.bvp.m = m;
        }
        self.strict |= o.strict;
    }

    /// Check every field and construct the family.
    pub fn validate(&self, base_dir: Option<&Path>) -> Result<OperatorFamily> {
        if self.checks.is_empty() {
            return Err(config_error("checks", "must list at least one check"));
        }
        for (i, c) in self.checks.iter().enumerate() {
            if self.checks[..i].contains(c) {
                return Err(config_error(
                    "checks",
                    format!("`{}` is listed twice", c.name()),
                ));
            }
        }
        self.tolerances.validate()?;
        self.flow
            .validate()
            .map_err(|e| config_error("flow", e.to_string()))?;
        let p = &self.propagator;
        if p.steps == 0 || p.intervals == 0 || !p.steps.is_multiple_of(p.intervals) {
            return Err(config_error(
                "propagator.steps",
                format!(
                    "must be a positive multiple of propagator.intervals = {}",
                    p.intervals
                ),
            ));
        }
        if p.checkpoints == 0 {
            return Err(config_error("propagator.checkpoints", "must be positive"));
        }
        if p.convergence_base_steps == 0 {
            return Err(config_error(
                "propagator.convergence_base_steps",
                "must be positive",
            ));
        }
        let g = &self.growth;
        if g.steps == 0 || g.intervals == 0 || !g.steps.is_multiple_of(g.intervals) {
            return Err(config_error(
                "growth.steps",
                "must be a positive multiple of growth.intervals",
            ));
        }
        let b = &self.bvp;
        if b.m < 4 || b.stability.iter().any(|&m| m < 4) {
            return Err(config_error("bvp.m", "slice counts must be at least 4"));
        }
        if b.shooting_intervals == 0 || b.shooting_steps_per_interval == 0 {
            return Err(config_error("bvp.shooting_intervals", "must be positive"));
        }
        if !(b.regularization > 0.0 && b.regularization < 0.5) {
            return Err(config_error("bvp.regularization", "must lie in (0, 1/2)"));
        }
        let c = &self.cauchy;
        if c.intervals < 2 || c.steps_per_interval == 0 {
            return Err(config_error(
                "cauchy.intervals",
                "need at least 2 intervals and 1 step each",
            ));
        }
        if !(c.min_ratio > 0.0 && c.min_ratio < c.max_ratio) {
            return Err(config_error(
                "cauchy.min_ratio",
                "need 0 < min_ratio < max_ratio",
            ));
        }
        if self.conjugation.samples == 0 {
            return Err(config_error("conjugation.samples", "must be positive"));
        }
        if self.output.formats.is_empty() {
            return Err(config_error(
                "output.formats",
                "must list at least one format",
            ));
        }
        if self.checks.contains(&CheckKind::CounterexampleGrowth)
            && !matches!(self.family, FamilySpec::Counterexample { .. })
        {
            return Err(config_error(
                "checks",
                "counterexample-growth needs a family of kind `counterexample`",
            ));
        }
        self.family
            .build(
                base_dir,
                FamilyOptions {
                    strict: self.strict,
                },
            )
            .map_err(|e| config_error("family", e.to_string()))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn line_of(text: &str, offset: usize) -> String {
    let line = text[..offset.min(text.len())].matches('\n').count() + 1;
    format!("line {line}")
}
