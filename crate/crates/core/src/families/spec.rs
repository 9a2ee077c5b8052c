//! Declarative family descriptions used by experiment configs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::*;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianMatrix, C64};

fn default_horizon() -> f64 {
    1.0
}

/// A Hermitian matrix written either as a real diagonal or as full real and
/// (optional) imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Diagonal {
        diag: Vec<f64>,
    },
    Dense {
        re: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<Vec<f64>>>,
    },
}

impl MatrixSpec {
    pub fn build(&self) -> Result<HermitianMatrix> {
        match self {
            MatrixSpec::Diagonal { diag } => {
                if diag.is_empty() {
                    return Err(Error::invalid("diag", "must be nonempty"));
                }
                Ok(HermitianMatrix::from_real_diagonal(diag))
            }
            MatrixSpec::Dense { re, im } => {
                let n = re.len();
                if n == 0 || re.iter().any(|r| r.len() != n) {
                    return Err(Error::invalid("re", "must be a nonempty square array"));
                }
                if let Some(im) = im {
                    if im.len() != n || im.iter().any(|r| r.len() != n) {
                        return Err(Error::invalid("im", "must have the same shape as `re`"));
                    }
                }
                let m = CMatrix::from_fn(n, n, |i, j| {
                    C64::new(re[i][j], im.as_ref().map_or(0.0, |im| im[i][j]))
                });
                HermitianMatrix::new(m)
            }
        }
    }
}

/// Family description, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    Constant {
        matrix: MatrixSpec,
        #[serde(default = "default_horizon")]
        horizon: f64,
    },
    Linear {
        a0: MatrixSpec,
        b: MatrixSpec,
        #[serde(default = "default_horizon")]
        horizon: f64,
    },
    DiagonalPath {
        start: Vec<f64>,
        end: Vec<f64>,
        #[serde(default = "default_horizon")]
        horizon: f64,
    },
    SwapBlock {
        lambda1: f64,
        lambda2: f64,
        #[serde(default)]
        profile: SwapProfile,
    },
    /// Either `m` (blocks with `λ_i = i`) or an explicit `lambdas` list.
    Counterexample {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambdas: Option<Vec<f64>>,
        #[serde(default)]
        profile: SwapProfile,
    },
    /// Matrix series read from a JSON or CSV file (by extension).
    CustomSamples { path: PathBuf },
    /// Matrix series given inline.
    Sampled {
        times: Vec<f64>,
        matrices: Vec<MatrixSpec>,
    },
    /// `A0 + tB + sin(πt)C` with seeded random Hermitian parts.
    Random { n: usize, seed: u64 },
}

impl FamilySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            FamilySpec::Constant { .. } => "constant",
            FamilySpec::Linear { .. } => "linear",
            FamilySpec::DiagonalPath { .. } => "diagonal-path",
            FamilySpec::SwapBlock { .. } => "swap-block",
            FamilySpec::Counterexample { .. } => "counterexample",
            FamilySpec::CustomSamples { .. } => "custom-samples",
            FamilySpec::Sampled { .. } => "sampled",
            FamilySpec::Random { .. } => "random",
        }
    }

    /// `λ_i` of a counterexample spec.
    pub fn counterexample_lambdas(m: Option<usize>, lambdas: Option<&[f64]>) -> Result<Vec<f64>> {
        match (m, lambdas) {
            (Some(_), Some(_)) => Err(Error::invalid(
                "counterexample",
                "give either `m` or `lambdas`, not both",
            )),
            (None, None) => Err(Error::invalid("counterexample", "missing `m` or `lambdas`")),
            (Some(m), None) => Ok((1..=m).map(|i| i as f64).collect()),
            (None, Some(l)) => {
                if l.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::invalid("lambdas", "must be ascending"));
                }
                Ok(l.to_vec())
            }
        }
    }

    /// Construct the family; relative sample paths resolve against
    /// `base_dir`.
    pub fn build(&self, base_dir: Option<&Path>, options: FamilyOptions) -> Result<OperatorFamily> {
        let family = match self {
            FamilySpec::Constant { matrix, horizon } => constant_family(matrix.build()?, *horizon)?,
            FamilySpec::Linear { a0, b, horizon } => {
                linear_family(a0.build()?, b.build()?, *horizon)?
            }
            FamilySpec::DiagonalPath {
                start,
                end,
                horizon,
            } => diagonal_path_family(start, end, *horizon)?,
            FamilySpec::SwapBlock {
                lambda1,
                lambda2,
                profile,
            } => swap_block_family_with(*lambda1, *lambda2, *profile)?,
            FamilySpec::Counterexample {
                m,
                lambdas,
                profile,
            } => {
                let lambdas = Self::counterexample_lambdas(*m, lambdas.as_deref())?;
                counterexample_family_with(&lambdas, *profile)?
            }
            FamilySpec::CustomSamples { path } => {
                let resolved = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let samples = match resolved.extension().and_then(|e| e.to_str()) {
                    Some("csv") => read_samples_csv(&resolved)?,
                    Some("json") => read_samples_json(&resolved)?,
                    _ => {
                        return Err(Error::invalid(
                            "path",
                            format!("{}: expected a .json or .csv file", resolved.display()),
                        ))
                    }
                };
                OperatorFamily::from_samples(&samples, options)?
            }
            FamilySpec::Sampled { times, matrices } => {
                let matrices = matrices
                    .iter()
                    .map(MatrixSpec::build)
                    .collect::<Result<Vec<_>>>()?;
                sampled_family(times, &matrices, options)?
            }
            FamilySpec::Random { n, seed } => random_smooth_family(*n, *seed)?,
        };
        if options.strict {
            if let Some(w) = family.warnings().first() {
                return Err(Error::invalid("family", w.clone()));
            }
        }
        Ok(family)
    }
}
