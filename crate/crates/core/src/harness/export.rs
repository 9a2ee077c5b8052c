//! Standalone data exports for external tools.

use std::path::Path;
use std::str::FromStr;

use super::config::{ExperimentConfig, OutputFormat};
use crate::aps::assemble_bvp;
use crate::error::{Error, Result};
use crate::evolution::propagate;
use crate::families::OperatorFamily;
use crate::spectral_flow::{eigenflow, write_eigenflow_csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportTarget {
    /// CSV `t, lambda_1 .. lambda_n`.
    Eigenflow,
    /// Grid and flattened unitaries, JSON or CSV.
    Propagator,
    /// Triplet dump of the discretized boundary-value operator.
    Operator,
}

impl FromStr for ExportTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigenflow" => Ok(ExportTarget::Eigenflow),
            "propagator" => Ok(ExportTarget::Propagator),
            "operator" => Ok(ExportTarget::Operator),
            _ => Err(Error::Config {
                field: "export".into(),
                message: format!(
                    "unknown target `{s}`; expected eigenflow, propagator or operator"
                ),
            }),
        }
    }
}

/// Write `target` for the config's family to `path`. `samples` is the row
/// count of the eigenvalue flow.
pub fn export(
    target: ExportTarget,
    config: &ExperimentConfig,
    family: &OperatorFamily,
    path: &Path,
    format: OutputFormat,
    samples: usize,
) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    match target {
        ExportTarget::Eigenflow => {
            if samples < 2 {
                return Err(Error::invalid("samples", "need at least 2"));
            }
            let flow = eigenflow(family, samples - 1, config.flow.mode)?;
            write_eigenflow_csv(path, &flow)
        }
        ExportTarget::Propagator => {
            let p = &config.propagator;
            let prop = propagate(family, p.intervals, p.steps_per_interval(), p.scheme)?;
            match format {
                OutputFormat::Json => prop.write_json(path),
                OutputFormat::Csv => prop.write_csv(path),
            }
        }
        ExportTarget::Operator => {
            assemble_bvp(family, config.bvp.m, &config.tolerances)?.write_triplets(path)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Propagator;

    #[test]
    fn eigenflow_rows() {
        let dir = tempfile::tempdir().unwrap();
        let c = ExperimentConfig::from_toml_str(
            "checks = [\"flowind\"]\n[family]\nkind = \"linear\"\na0 = { diag = [-0.5] }\nb = { diag = [1.0] }\n",
        )
        .unwrap();
        let f = c.validate(None).unwrap();
        let path = dir.path().join("flow.csv");
        export(
            ExportTarget::Eigenflow,
            &c,
            &f,
            &path,
            OutputFormat::Csv,
            101,
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 101);
        assert_eq!(rows[50], "0.5,0");

        let path = dir.path().join("prop.json");
        export(
            ExportTarget::Propagator,
            &c,
            &f,
            &path,
            OutputFormat::Json,
            0,
        )
        .unwrap();
        assert_eq!(Propagator::read_json(&path).unwrap().intervals(), 64);
        assert!("bogus".parse::<ExportTarget>().is_err());
    }
}
