//! Bundled suites over the family zoo.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{CheckKind, ExperimentConfig, OutputFormat, Overrides};
use super::run::{run_checks, write_text, RunReport, Timing, SCHEMA_VERSION};
use super::zoo::{has_commuting_values, random_zoo, shipped_zoo};
use crate::error::{Error, Result};
use crate::evolution::StepScheme;
use crate::families::{FamilySpec, SwapProfile};
use crate::parallel::{map_with, ExecMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Theorems,
    Counterexample,
    Convergence,
    Random,
    All,
}

impl SuiteName {
    pub const ALL: [SuiteName; 5] = [
        SuiteName::Theorems,
        SuiteName::Counterexample,
        SuiteName::Convergence,
        SuiteName::Random,
        SuiteName::All,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteName::Theorems => "theorems",
            SuiteName::Counterexample => "counterexample",
            SuiteName::Convergence => "convergence",
            SuiteName::Random => "random",
            SuiteName::All => "all",
        }
    }
}

impl FromStr for SuiteName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteName::ALL.into_iter().find(|n| n.name() == s).ok_or_else(|| Error::Config {
            field: "suite".into(),
            message: format!("unknown suite `{s}`; expected one of theorems, counterexample, convergence, random, all"),
        })
    }
}

/// Block counts of the counterexample study.
pub const COUNTEREXAMPLE_SIZES: [usize; 5] = [1, 2, 4, 8, 16];

pub const DEFAULT_RANDOM_COUNT: usize = 100;

pub const DEFAULT_MAX_DIM: usize = 64;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Number of random families.
    pub count: Option<usize>,
    /// Families of larger dimension are skipped.
    pub max_dim: Option<usize>,
    /// Applied to every constituent config (output settings excepted).
    pub overrides: Overrides,
    pub mode: ExecMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub version: String,
    pub suite: SuiteName,
    pub seed: u64,
    pub count: usize,
    pub max_dim: usize,
    pub runs: Vec<RunReport>,
    /// Constituent configs that could not be set up.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub setup_errors: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub struct SuiteOutcome {
    pub report: SuiteReport,
    pub timings: Vec<Timing>,
}

fn with_scheme(mut c: ExperimentConfig, scheme: StepScheme, steps: usize) -> ExperimentConfig {
    c.propagator.scheme = scheme;
    c.propagator.steps = steps;
    c
}

fn family_dim(spec: &FamilySpec) -> usize {
    match spec {
        FamilySpec::Constant { matrix, .. } => matrix_dim(matrix),
        FamilySpec::Linear { a0, .. } => matrix_dim(a0),
        FamilySpec::DiagonalPath { start, .. } => start.len(),
        FamilySpec::SwapBlock { .. } => 2,
        FamilySpec::Counterexample { m, lambdas, .. } => {
            2 * m.unwrap_or_else(|| lambdas.as_ref().map_or(0, Vec::len))
        }
        FamilySpec::Sampled { matrices, .. } => matrices.first().map_or(0, matrix_dim),
        FamilySpec::Random { n, .. } => *n,
        FamilySpec::CustomSamples { .. } => 0,
    }
}

fn matrix_dim(m: &crate::families::MatrixSpec) -> usize {
    match m {
        crate::families::MatrixSpec::Diagonal { diag } => diag.len(),
        crate::families::MatrixSpec::Dense { re, .. } => re.len(),
    }
}

fn fourth_order_smooth(spec: &FamilySpec) -> bool {
    match spec {
        FamilySpec::SwapBlock { profile, .. } | FamilySpec::Counterexample { profile, .. } => {
            profile.is_smooth()
        }
        _ => true,
    }
}

/// Constituent configs of a suite, in report order.
pub fn suite_configs(name: SuiteName, opts: &SuiteOptions) -> Vec<ExperimentConfig> {
    let max_dim = opts.max_dim.unwrap_or(DEFAULT_MAX_DIM);
    let count = opts.count.unwrap_or(DEFAULT_RANDOM_COUNT);
    let mut configs = match name {
        SuiteName::Theorems => shipped_zoo()
            .into_iter()
            .map(|(_, spec)| {
                let c = ExperimentConfig::new(
                    spec,
                    vec![
                        CheckKind::Flowind,
                        CheckKind::LorentzianMain,
                        CheckKind::RiemannianMain,
                        CheckKind::ConjugationInvariance,
                        CheckKind::CauchyWellposedness,
                    ],
                );
                with_scheme(c, StepScheme::FourthOrderCommutatorFree, 1024)
            })
            .collect(),
        SuiteName::Counterexample => COUNTEREXAMPLE_SIZES
            .iter()
            .map(|&m| {
                let spec = FamilySpec::Counterexample {
                    m: Some(m),
                    lambdas: None,
                    profile: SwapProfile::Quintic,
                };
                let c = ExperimentConfig::new(
                    spec,
                    vec![
                        CheckKind::CounterexampleGrowth,
                        CheckKind::Flowind,
                        CheckKind::LorentzianMain,
                    ],
                );
                with_scheme(c, StepScheme::FourthOrderCommutatorFree, 4096)
            })
            .collect(),
        SuiteName::Convergence => {
            let mut specs: Vec<FamilySpec> = shipped_zoo()
                .into_iter()
                .map(|(_, s)| s)
                .filter(|s| !has_commuting_values(s) && !matches!(s, FamilySpec::Sampled { .. }))
                .collect();
            specs.extend(random_zoo(opts.seed, 4, max_dim.min(4)));
            let mut configs = Vec::new();
            for spec in specs {
                for scheme in [
                    StepScheme::MidpointExponential,
                    StepScheme::FourthOrderCommutatorFree,
                ] {
                    if scheme.order() > 2 && !fourth_order_smooth(&spec) {
                        continue;
                    }
                    let c =
                        ExperimentConfig::new(spec.clone(), vec![CheckKind::PropagatorConvergence]);
                    configs.push(with_scheme(c, scheme, 1024));
                }
            }
            configs
        }
        SuiteName::Random => random_zoo(opts.seed, count, max_dim.min(16))
            .into_iter()
            .map(|spec| {
                ExperimentConfig::new(
                    spec,
                    vec![
                        CheckKind::Flowind,
                        CheckKind::LorentzianMain,
                        CheckKind::RiemannianMain,
                        CheckKind::ConjugationInvariance,
                    ],
                )
            })
            .collect(),
        SuiteName::All => [
            SuiteName::Theorems,
            SuiteName::Counterexample,
            SuiteName::Convergence,
            SuiteName::Random,
        ]
        .into_iter()
        .flat_map(|s| suite_configs(s, opts))
        .collect(),
    };
    if name != SuiteName::All {
        configs.retain(|c| family_dim(&c.family) <= max_dim);
        let mut overrides = opts.overrides.clone();
        overrides.out = None;
        overrides.format = None;
        for c in &mut configs {
            c.seed = opts.seed;
            c.apply(&overrides);
        }
    }
    configs
}

/// Run every constituent config; independent runs go in parallel and the
/// report keeps the config order.
pub fn run_suite(name: SuiteName, opts: &SuiteOptions) -> SuiteOutcome {
    let configs = suite_configs(name, opts);
    let outcomes = map_with(opts.mode, &configs, |c| {
        c.validate(None).map(|family| {
            let mut out = run_checks(c, &family);
            out.traces = Default::default();
            (out.report, out.timings)
        })
    });
    let mut runs = Vec::with_capacity(outcomes.len());
    let mut timings = Vec::new();
    let mut setup_errors = Vec::new();
    for (c, outcome) in configs.iter().zip(outcomes) {
        match outcome {
            Ok((report, t)) => {
                runs.push(report);
                timings.extend(t);
            }
            Err(e) => setup_errors.push(format!("{}: {e}", c.family.kind())),
        }
    }
    let pass = setup_errors.is_empty() && runs.iter().all(|r| r.pass);
    SuiteOutcome {
        report: SuiteReport {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            suite: name,
            seed: opts.seed,
            count: opts.count.unwrap_or(DEFAULT_RANDOM_COUNT),
            max_dim: opts.max_dim.unwrap_or(DEFAULT_MAX_DIM),
            runs,
            setup_errors,
            pass,
        },
        timings,
    }
}

/// `report.json` and/or `summary.csv` (one row per check) in `dir`.
pub fn write_suite_outputs(
    report: &SuiteReport,
    dir: &Path,
    formats: &[OutputFormat],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&OutputFormat::Json) {
        let path = dir.join("report.json");
        write_text(&path, &(report.to_json() + "\n"))?;
        written.push(path);
    }
    if formats.contains(&OutputFormat::Csv) {
        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["family", "check", "pass", "error"])?;
        for run in &report.runs {
            for r in &run.results {
                w.write_record([
                    run.family.label.as_str(),
                    r.check.name(),
                    if r.pass { "true" } else { "false" },
                    r.error.as_deref().unwrap_or(""),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
