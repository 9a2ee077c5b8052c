//! Shipped families.

use crate::families::{FamilySpec, MatrixSpec, SwapProfile};

fn diag(v: &[f64]) -> MatrixSpec {
    MatrixSpec::Diagonal { diag: v.to_vec() }
}

fn dense(rows: &[&[f64]]) -> MatrixSpec {
    MatrixSpec::Dense {
        re: rows.iter().map(|r| r.to_vec()).collect(),
        im: None,
    }
}

/// Named families exercised by the theorem suite.
pub fn shipped_zoo() -> Vec<(&'static str, FamilySpec)> {
    vec![
        (
            "constant-gapped",
            FamilySpec::Constant {
                matrix: diag(&[-1.0, 1.0]),
                horizon: 1.0,
            },
        ),
        (
            "linear-crossing",
            FamilySpec::Linear {
                a0: diag(&[-0.5]),
                b: diag(&[1.0]),
                horizon: 1.0,
            },
        ),
        (
            "linear-singular-start",
            FamilySpec::Linear {
                a0: diag(&[0.0]),
                b: diag(&[1.0]),
                horizon: 1.0,
            },
        ),
        (
            "shifted-swap",
            FamilySpec::Linear {
                a0: dense(&[&[0.0, 1.0], &[1.0, 0.0]]),
                b: diag(&[1.0, 1.0]),
                horizon: 1.0,
            },
        ),
        (
            "diagonal-path",
            FamilySpec::DiagonalPath {
                start: vec![-1.0, -0.5, 0.3],
                end: vec![0.7, 0.5, -0.4],
                horizon: 1.0,
            },
        ),
        (
            "swap-block",
            FamilySpec::SwapBlock {
                lambda1: -1.0,
                lambda2: 1.0,
                profile: SwapProfile::Quintic,
            },
        ),
        (
            "swap-block-bounded-slope",
            FamilySpec::SwapBlock {
                lambda1: -1.0,
                lambda2: 1.0,
                profile: SwapProfile::BoundedSlope,
            },
        ),
        (
            "counterexample-3",
            FamilySpec::Counterexample {
                m: Some(3),
                lambdas: None,
                profile: SwapProfile::Quintic,
            },
        ),
        (
            "sampled-crossing",
            FamilySpec::Sampled {
                times: vec![0.0, 0.4, 1.0],
                matrices: vec![
                    dense(&[&[-1.0, 0.3], &[0.3, 0.5]]),
                    dense(&[&[0.2, 0.3], &[0.3, 0.4]]),
                    dense(&[&[0.8, 0.0], &[0.0, -0.6]]),
                ],
            },
        ),
    ]
}

/// Families with a known exact propagator have deviations that vanish
/// identically (commuting families) and say nothing about the step order.
pub fn has_commuting_values(spec: &FamilySpec) -> bool {
    match spec {
        FamilySpec::Constant { .. } | FamilySpec::DiagonalPath { .. } => true,
        FamilySpec::Linear { a0, b, .. } => {
            matches!(b, MatrixSpec::Diagonal { diag } if diag.windows(2).all(|w| w[0] == w[1]))
                || matches!(
                    (a0, b),
                    (MatrixSpec::Diagonal { .. }, MatrixSpec::Diagonal { .. })
                )
        }
        _ => false,
    }
}

/// Seed of the `i`-th random family of a suite run with `seed`.
pub fn random_family_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

/// Dimensions of the random zoo, cycling through `{2, 4, 8, 16}`.
pub fn random_zoo(seed: u64, count: usize, max_dim: usize) -> Vec<FamilySpec> {
    let dims: Vec<usize> = [2, 4, 8, 16]
        .into_iter()
        .filter(|&n| n <= max_dim)
        .collect();
    if dims.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|i| FamilySpec::Random {
            n: dims[i % dims.len()],
            seed: random_family_seed(seed, i),
        })
        .collect()
}
