//! Executing a config: checks, reports and traces.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::config::{CheckKind, ExperimentConfig, OutputFormat};
use crate::aps::{
    counterexample_growth_with, evolved_conjugation_check, lorentzian_main_check,
    riemannian_main_check, riemannian_stability, GrowthOptions, GrowthTable, LorentzianMainRecord,
    RiemannianMainRecord, StabilityRecord,
};
use crate::error::{Error, Result};
use crate::evolution::{
    cauchy_residual, cauchy_solve, convergence_study, propagate, ConvergenceStudy, Propagator,
    StructureDefects,
};
use crate::families::{FamilySpec, OperatorFamily, Regularity};
use crate::linalg::{unitarity_defect, CVector, C64};
use crate::spectral_flow::{
    eigenflow, flowind_check, write_eigenflow_csv, ConjugationRecord, FlowIndRecord,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySummary {
    pub label: String,
    pub dim: usize,
    pub horizon: f64,
    pub regularity: Regularity,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FamilySummary {
    fn of(f: &OperatorFamily) -> Self {
        FamilySummary {
            label: f.label().to_string(),
            dim: f.dim(),
            horizon: f.horizon(),
            regularity: f.regularity(),
            warnings: f.warnings().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureOutcome {
    pub defects: StructureDefects,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorentzianOutcome {
    pub record: LorentzianMainRecord,
    pub structure: StructureOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiemannianOutcome {
    pub record: RiemannianMainRecord,
    pub stability: StabilityRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyRecord {
    pub anchor: f64,
    /// `max_k |f(t_k) - Q(t_k, s) x|` for the homogeneous problem.
    pub homogeneous_deviation: f64,
    pub intervals: Vec<usize>,
    /// Discrete residual with a smooth source on each grid.
    pub residuals: Vec<f64>,
    pub ratio: f64,
    /// False for piecewise-`C¹` families, whose residual is only `O(h)` on
    /// cells containing a kink; the ratio is then reported but not asserted.
    pub order_checked: bool,
    pub pass: bool,
}

/// Per-check payload.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckOutcome {
    Flowind(FlowIndRecord),
    LorentzianMain(LorentzianOutcome),
    RiemannianMain(Box<RiemannianOutcome>),
    CounterexampleGrowth(GrowthTable),
    PropagatorConvergence(ConvergenceStudy),
    ConjugationInvariance(ConjugationRecord),
    CauchyWellposedness(CauchyRecord),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: CheckKind,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<CheckOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub family: FamilySummary,
    pub results: Vec<CheckResult>,
    pub pass: bool,
}

impl RunReport {
    pub fn result(&self, check: CheckKind) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check == check)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Wall-clock time of one check, kept out of the report so that reports are
/// byte-identical across runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub family: String,
    pub check: String,
    pub seconds: f64,
}

/// Traces gathered while running, written as CSV on request.
#[derive(Clone, Debug, Default)]
pub struct Traces {
    pub unitarity_drift: Vec<(f64, f64)>,
    /// `(source, t, position, value)`.
    pub singular_values: Vec<(String, f64, usize, f64)>,
}

pub struct RunOutcome {
    pub report: RunReport,
    pub timings: Vec<Timing>,
    pub traces: Traces,
    pub family: OperatorFamily,
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    family: &'a OperatorFamily,
    propagator: Option<Propagator>,
}

impl Context<'_> {
    fn propagator(&mut self) -> Result<&Propagator> {
        if self.propagator.is_none() {
            let p = &self.config.propagator;
            self.propagator = Some(propagate(
                self.family,
                p.intervals,
                p.steps_per_interval(),
                p.scheme,
            )?);
        }
        Ok(self.propagator.as_ref().expect("set above"))
    }
}

/// Run every requested check of an already validated config on `family`.
pub fn run_checks(config: &ExperimentConfig, family: &OperatorFamily) -> RunOutcome {
    let mut ctx = Context {
        config,
        family,
        propagator: None,
    };
    let mut traces = Traces::default();
    let mut results = Vec::with_capacity(config.checks.len());
    let mut timings = Vec::with_capacity(config.checks.len());
    for &check in &config.checks {
        let start = Instant::now();
        let result = match run_check(&mut ctx, check, &mut traces) {
            Ok((pass, outcome)) => CheckResult {
                check,
                pass,
                outcome: Some(outcome),
                error: None,
            },
            Err(e) => {
                log::error!("{}: {} failed: {e}", family.label(), check.name());
                CheckResult {
                    check,
                    pass: false,
                    outcome: None,
                    error: Some(e.to_string()),
                }
            }
        };
        timings.push(Timing {
            family: family.label().to_string(),
            check: check.name().to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        results.push(result);
    }
    if let Some(p) = &ctx.propagator {
        traces.unitarity_drift = p
            .grid()
            .iter()
            .zip(p.unitaries())
            .map(|(&t, u)| (t, unitarity_defect(u)))
            .collect();
    }
    let pass = results.iter().all(|r| r.pass);
    RunOutcome {
        report: RunReport {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config: config.clone(),
            family: FamilySummary::of(family),
            results,
            pass,
        },
        timings,
        traces,
        family: family.clone(),
    }
}

fn run_check(
    ctx: &mut Context<'_>,
    check: CheckKind,
    traces: &mut Traces,
) -> Result<(bool, CheckOutcome)> {
    let config = ctx.config;
    let f = ctx.family;
    let tol = &config.tolerances;
    let flow = &config.flow;
    match check {
        CheckKind::Flowind => {
            let r = flowind_check(f, flow, tol)?;
            push_singular_values(
                traces,
                "flowind",
                f.horizon(),
                &r.index.diagnostics.singular_values,
            );
            Ok((r.equal, CheckOutcome::Flowind(r)))
        }
        CheckKind::LorentzianMain => {
            let p = ctx.propagator()?;
            let record = lorentzian_main_check(f, p, config.propagator.checkpoints, flow, tol)?;
            let defects = p.structure();
            let structure = StructureOutcome {
                pass: defects.unitarity <= tol.unitarity
                    && defects.cocycle <= tol.cocycle
                    && defects.isometry <= tol.isometry,
                defects,
            };
            for c in &record.checkpoints {
                push_singular_values(
                    traces,
                    "lorentzian",
                    c.t,
                    &c.projection.diagnostics.singular_values,
                );
            }
            let pass = record.pass && structure.pass;
            Ok((
                pass,
                CheckOutcome::LorentzianMain(LorentzianOutcome { record, structure }),
            ))
        }
        CheckKind::RiemannianMain => {
            let opts = config.bvp.riemannian_options();
            let record = riemannian_main_check(f, &opts, flow, tol)?;
            let stability = riemannian_stability(f, &config.bvp.stability, config.bvp.solver, tol)?;
            push_singular_values(
                traces,
                "riemannian",
                f.horizon(),
                &record.discretized.diagnostics.singular_values,
            );
            let pass = record.pass && stability.stable;
            Ok((
                pass,
                CheckOutcome::RiemannianMain(Box::new(RiemannianOutcome { record, stability })),
            ))
        }
        CheckKind::CounterexampleGrowth => {
            let FamilySpec::Counterexample {
                m,
                lambdas,
                profile,
            } = &config.family
            else {
                return Err(Error::Config {
                    field: "checks".into(),
                    message: "counterexample-growth needs a family of kind `counterexample`".into(),
                });
            };
            let lambdas = FamilySpec::counterexample_lambdas(*m, lambdas.as_deref())?;
            let g = &config.growth;
            let opts = GrowthOptions {
                intervals: g.intervals,
                steps_per_interval: g.steps / g.intervals,
                scheme: g.scheme,
                profile: *profile,
            };
            let table = counterexample_growth_with(&[lambdas], &opts, flow, tol)?;
            Ok((table.pass, CheckOutcome::CounterexampleGrowth(table)))
        }
        CheckKind::PropagatorConvergence => {
            let study = convergence_study(
                f,
                config.propagator.scheme,
                config.propagator.convergence_base_steps,
            )?;
            Ok((study.pass, CheckOutcome::PropagatorConvergence(study)))
        }
        CheckKind::ConjugationInvariance => {
            let p = ctx.propagator()?;
            let r = evolved_conjugation_check(f, p, config.conjugation.samples, flow, tol)?;
            Ok((r.equal, CheckOutcome::ConjugationInvariance(r)))
        }
        CheckKind::CauchyWellposedness => {
            let r = cauchy_check(config, f)?;
            Ok((r.pass, CheckOutcome::CauchyWellposedness(r)))
        }
    }
}

fn push_singular_values(traces: &mut Traces, source: &str, t: f64, values: &[f64]) {
    traces.singular_values.extend(
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (source.to_string(), t, i, v)),
    );
}

fn seeded_vector(n: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v = CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let norm = v.norm();
    v.unscale(norm)
}

/// Homogeneous agreement with the propagator plus the `O(h²)` residual
/// under grid doubling, with a seeded initial value and smooth source.
fn cauchy_check(config: &ExperimentConfig, f: &OperatorFamily) -> Result<CauchyRecord> {
    let c = &config.cauchy;
    let n = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x = seeded_vector(n, &mut rng);
    let v = seeded_vector(n, &mut rng);
    let anchor = f.horizon() / 2.0;
    let source = |grid: &[f64]| -> Vec<CVector> {
        grid.iter()
            .map(|&t| &v * C64::new((3.0 * t).cos(), (2.0 * t).sin()))
            .collect()
    };

    let intervals = vec![c.intervals, 2 * c.intervals];
    let mut residuals = Vec::with_capacity(2);
    let mut homogeneous_deviation = 0.0_f64;
    for &k in &intervals {
        let p = propagate(f, k, c.steps_per_interval, config.propagator.scheme)?;
        let free = cauchy_solve(&p, anchor, &x, None)?;
        for (t, value) in p.grid().iter().zip(&free.values) {
            let expected = p.q_between(*t, anchor)? * &x;
            homogeneous_deviation = homogeneous_deviation.max((value - expected).norm());
        }
        let g = source(p.grid());
        let forced = cauchy_solve(&p, anchor, &x, Some(&g))?;
        residuals.push(cauchy_residual(f, &forced, Some(&g))?);
    }
    let ratio = residuals[0] / residuals[1];
    let order_checked = f.regularity() == Regularity::Smooth;
    let pass = homogeneous_deviation <= config.tolerances.cauchy_match
        && (!order_checked || (ratio >= c.min_ratio && ratio <= c.max_ratio));
    Ok(CauchyRecord {
        anchor,
        homogeneous_deviation,
        intervals,
        residuals,
        ratio,
        order_checked,
        pass,
    })
}

/// Validate `config` (relative family paths resolve against `base_dir`) and
/// run it.
pub fn run_config(config: &ExperimentConfig, base_dir: Option<&Path>) -> Result<RunOutcome> {
    let family = config.validate(base_dir)?;
    Ok(run_checks(config, &family))
}

/// Files written for one run.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let config = &outcome.report.config;
    let mut written = Vec::new();
    if config.output.formats.contains(&OutputFormat::Json) {
        let path = dir.join("report.json");
        write_text(&path, &(outcome.report.to_json() + "\n"))?;
        written.push(path);
    }
    if config.output.formats.contains(&OutputFormat::Csv) {
        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["check", "pass", "error"])?;
        for r in &outcome.report.results {
            w.write_record([
                r.check.name(),
                if r.pass { "true" } else { "false" },
                r.error.as_deref().unwrap_or(""),
            ])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);

        let path = dir.join("eigenflow.csv");
        let flow = eigenflow(
            &outcome.family,
            config.output.eigenflow_samples.max(2) - 1,
            config.flow.mode,
        )?;
        write_eigenflow_csv(&path, &flow)?;
        written.push(path);

        if !outcome.traces.unitarity_drift.is_empty() {
            let path = dir.join("unitarity_drift.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["t", "defect"])?;
            for (t, d) in &outcome.traces.unitarity_drift {
                w.write_record([t.to_string(), d.to_string()])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        if !outcome.traces.singular_values.is_empty() {
            let path = dir.join("singular_values.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["source", "t", "position", "value"])?;
            for (s, t, i, v) in &outcome.traces.singular_values {
                w.write_record([s.clone(), t.to_string(), i.to_string(), v.to_string()])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn write_timings(path: &Path, timings: &[Timing]) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(timings)? + "\n"))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(toml: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(toml).unwrap()
    }

    #[test]
    fn constant_flowind_run() {
        let c = config("checks = [\"flowind\"]\n[family]\nkind = \"constant\"\nmatrix = { diag = [-1.0, 1.0] }\n");
        let out = run_config(&c, None).unwrap();
        assert!(out.report.pass);
        match out.report.results[0].outcome.as_ref().unwrap() {
            CheckOutcome::Flowind(r) => assert_eq!((r.sfl, r.index.index), (0, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_checks_on_linear_crossing() {
        let c = config(
            "checks = [\"flowind\", \"lorentzian-main\", \"riemannian-main\", \"propagator-convergence\", \
             \"conjugation-invariance\", \"cauchy-wellposedness\"]\n\
             [family]\nkind = \"linear\"\na0 = { diag = [-0.5] }\nb = { diag = [1.0] }\n",
        );
        let out = run_config(&c, None).unwrap();
        for r in &out.report.results {
            assert!(r.pass, "{r:?}");
        }
        assert_eq!(out.timings.len(), 6);
        assert_eq!(out.traces.unitarity_drift.len(), 65);
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config("checks = [\"lorentzian-main\"]\n[family]\nkind = \"diagonal-path\"\nstart = [-1.0, 0.5]\nend = [1.0, -0.5]\n");
        c.output.formats = vec![OutputFormat::Json, OutputFormat::Csv];
        let out = run_config(&c, None).unwrap();
        let files = write_outputs(&out, dir.path()).unwrap();
        let names: Vec<_> = files
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(
            names,
            [
                "report.json",
                "summary.csv",
                "eigenflow.csv",
                "unitarity_drift.csv",
                "singular_values.csv"
            ]
        );
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(json["schema_version"], 1);
        assert_eq!(json["results"][0]["check"], "lorentzian-main");
    }
}
