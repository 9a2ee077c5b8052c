//! `specflow`: run experiment configs, bundled suites and data exports.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a run
//! cannot finish, 2 for usage and config errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use specflow::harness::{
    export, run_config, run_suite, write_outputs, write_suite_outputs, write_timings,
    ExperimentConfig, ExportTarget, OutputFormat, Overrides, SuiteName, SuiteOptions,
};
use specflow::parallel::{init_threads, ExecMode};
use specflow::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "specflow",
    version,
    about = "Spectral flow and APS index experiments"
)]
struct Cli {
    /// Worker threads for independent runs and checkpoints.
    #[arg(long, env = "SPECFLOW_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the checks listed in a config file.
    Run {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a bundled suite.
    Suite {
        #[arg(value_enum)]
        name: SuiteArg,
        /// Number of random families.
        #[arg(long)]
        count: Option<usize>,
        /// Skip families of larger dimension.
        #[arg(long, value_name = "N")]
        max_dim: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Write eigenvalue flows, propagators or the discretized operator.
    Export {
        #[arg(value_enum)]
        what: ExportArg,
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        /// Output file.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Propagator dump format.
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Rows of the eigenvalue flow.
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_name = "M")]
        grid: Option<usize>,
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for reports, traces and timings; the report goes to stdout
    /// otherwise.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Total propagator steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Slices of the discretized boundary-value operator.
    #[arg(long, value_name = "M")]
    grid: Option<usize>,
    /// Treat construction warnings as errors.
    #[arg(long)]
    strict: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            format: self.format.map(Into::into),
            steps: self.steps,
            grid: self.grid,
            strict: self.strict,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Theorems,
    Counterexample,
    Convergence,
    Random,
    All,
}

impl From<SuiteArg> for SuiteName {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Theorems => SuiteName::Theorems,
            SuiteArg::Counterexample => SuiteName::Counterexample,
            SuiteArg::Convergence => SuiteName::Convergence,
            SuiteArg::Random => SuiteName::Random,
            SuiteArg::All => SuiteName::All,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportArg {
    Eigenflow,
    Propagator,
    Operator,
}

impl From<ExportArg> for ExportTarget {
    fn from(e: ExportArg) -> Self {
        match e {
            ExportArg::Eigenflow => ExportTarget::Eigenflow,
            ExportArg::Propagator => ExportTarget::Propagator,
            ExportArg::Operator => ExportTarget::Operator,
        }
    }
}

/// Config problems are usage errors; anything later is a failed run.
fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

fn fail(e: Error, code: u8) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn load(path: &Path, overrides: &Overrides) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    config.apply(overrides);
    Ok(config)
}

fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn cmd_run(path: &Path, common: &Common) -> ExitCode {
    let config = match load(path, &common.overrides()) {
        Ok(c) => c,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    let outcome = match run_config(&config, path.parent()) {
        Ok(o) => o,
        Err(e) => {
            let code = exit_for(&e);
            return fail(e, code);
        }
    };
    match &config.output.path {
        Some(dir) => {
            let written = write_outputs(&outcome, dir).and_then(|files| {
                write_timings(&dir.join("timings.json"), &outcome.timings)?;
                Ok(files)
            });
            match written {
                Ok(files) => {
                    for f in files {
                        eprintln!("wrote {}", f.display());
                    }
                }
                Err(e) => return fail(e, EXIT_FAIL),
            }
        }
        None => print_stdout(&outcome.report.to_json()),
    }
    for r in &outcome.report.results {
        eprintln!(
            "{:<24} {}",
            r.check.name(),
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    if outcome.report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn cmd_suite(
    name: SuiteName,
    count: Option<usize>,
    max_dim: Option<usize>,
    common: &Common,
) -> ExitCode {
    let opts = SuiteOptions {
        seed: common.seed.unwrap_or(0),
        count,
        max_dim,
        overrides: common.overrides(),
        mode: ExecMode::default(),
    };
    let outcome = run_suite(name, &opts);
    let report = &outcome.report;
    match &common.out {
        Some(dir) => {
            let formats = [common.format.map_or(OutputFormat::Json, Into::into)];
            let written = write_suite_outputs(report, dir, &formats).and_then(|files| {
                write_timings(&dir.join("timings.json"), &outcome.timings)?;
                Ok(files)
            });
            match written {
                Ok(files) => {
                    for f in files {
                        eprintln!("wrote {}", f.display());
                    }
                }
                Err(e) => return fail(e, EXIT_FAIL),
            }
        }
        None => print_stdout(&report.to_json()),
    }
    let failed = report.runs.iter().filter(|r| !r.pass).count() + report.setup_errors.len();
    eprintln!(
        "suite {}: {} runs, {} failed",
        name.name(),
        report.runs.len() + report.setup_errors.len(),
        failed
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_export(
    what: ExportTarget,
    path: &Path,
    out: &Path,
    format: OutputFormat,
    samples: usize,
    steps: Option<usize>,
    grid: Option<usize>,
    strict: bool,
) -> ExitCode {
    let overrides = Overrides {
        steps,
        grid,
        strict,
        ..Default::default()
    };
    let config = match load(path, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    let family = match config.validate(path.parent()) {
        Ok(f) => f,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    match export(what, &config, &family, out, format, samples) {
        Ok(()) => {
            eprintln!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_for(&e);
            fail(e, code)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_USAGE);
        }
        init_threads(n);
    }
    match &cli.command {
        Command::Run { config, common } => cmd_run(config, common),
        Command::Suite {
            name,
            count,
            max_dim,
            common,
        } => cmd_suite((*name).into(), *count, *max_dim, common),
        Command::Export {
            what,
            config,
            out,
            format,
            samples,
            steps,
            grid,
            strict,
        } => cmd_export(
            (*what).into(),
            config,
            out,
            (*format).into(),
            *samples,
            *steps,
            *grid,
            *strict,
        ),
    }
}
