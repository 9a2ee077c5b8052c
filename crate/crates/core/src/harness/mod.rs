//! Experiment configs, suites and reports.

mod config;
mod export;
mod run;
mod suite;
mod zoo;

pub use config::{
    BvpConfig, CauchyConfig, CheckKind, ConjugationConfig, ExperimentConfig, GrowthConfig,
    OutputConfig, OutputFormat, Overrides, PropagatorConfig,
};
pub use export::{export, ExportTarget};
pub use run::{
    run_checks, run_config, write_outputs, write_timings, CauchyRecord, CheckOutcome, CheckResult,
    FamilySummary, LorentzianOutcome, RiemannianOutcome, RunOutcome, RunReport, StructureOutcome,
    Timing, Traces, SCHEMA_VERSION,
};
pub use suite::{
    run_suite, suite_configs, write_suite_outputs, SuiteName, SuiteOptions, SuiteOutcome,
    SuiteReport, COUNTEREXAMPLE_SIZES, DEFAULT_MAX_DIM, DEFAULT_RANDOM_COUNT,
};
pub use zoo::{has_commuting_values, random_family_seed, random_zoo, shipped_zoo};
