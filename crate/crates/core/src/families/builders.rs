use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{FamilyOptions, MatrixFn, OperatorFamily, PlateauBump, SwapProfile};
use crate::error::{Error, Result};
use crate::linalg::{eigh, CMatrix, HermitianMatrix, C64};
use crate::tolerance::Tolerances;

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "horizon",
            format!("must be positive, got {horizon}"),
        ))
    }
}

/// `A(t) = A0`.
pub fn constant_family(a0: HermitianMatrix, horizon: f64) -> Result<OperatorFamily> {
    check_horizon(horizon)?;
    let n = a0.dim();
    let eval: MatrixFn = Arc::new(move |_| a0.clone());
    let derivative: MatrixFn = Arc::new(move |_| HermitianMatrix::zeros(n));
    OperatorFamily::new(
        n,
        horizon,
        "constant",
        eval,
        Some(derivative),
        FamilyOptions::default(),
    )
}

/// `A(t) = A0 + tB`.
pub fn linear_family(
    a0: HermitianMatrix,
    b: HermitianMatrix,
    horizon: f64,
) -> Result<OperatorFamily> {
    check_horizon(horizon)?;
    if a0.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a0.dim(),
            found: b.dim(),
        });
    }
    let n = a0.dim();
    let slope = b.clone();
    let eval: MatrixFn = Arc::new(move |t| &a0 + &(&b * t));
    let derivative: MatrixFn = Arc::new(move |_| slope.clone());
    OperatorFamily::new(
        n,
        horizon,
        "linear",
        eval,
        Some(derivative),
        FamilyOptions::default(),
    )
}

/// `A(t) = diag((1 - t/T) start + (t/T) end)`.
pub fn diagonal_path_family(start: &[f64], end: &[f64], horizon: f64) -> Result<OperatorFamily> {
    if start.len() != end.len() {
        return Err(Error::DimensionMismatch {
            expected: start.len(),
            found: end.len(),
        });
    }
    if start.is_empty() {
        return Err(Error::invalid("diagonal", "must be nonempty"));
    }
    check_horizon(horizon)?;
    let slope: Vec<f64> = start
        .iter()
        .zip(end)
        .map(|(a, b)| (b - a) / horizon)
        .collect();
    let a0 = HermitianMatrix::from_real_diagonal(start);
    let b = HermitianMatrix::from_real_diagonal(&slope);
    Ok(linear_family(a0, b, horizon)?.with_label("diagonal-path"))
}

/// `a + b(t)` for one swap block, together with its time derivative.
pub fn swap_block_matrix(
    lambda1: f64,
    lambda2: f64,
    profile: SwapProfile,
    t: f64,
) -> (CMatrix, CMatrix) {
    let omega = lambda1 - lambda2;
    let phase = C64::from_polar(1.0, omega * t);
    let i = C64::i();
    let b01 = i * profile.dphi(t) * phase;
    let db01 = (i * profile.ddphi(t) - omega * profile.dphi(t)) * phase;
    let a = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(lambda1, 0.0),
            b01,
            b01.conj(),
            C64::new(lambda2, 0.0),
        ],
    );
    let da = CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), db01, db01.conj(), C64::new(0.0, 0.0)],
    );
    (a, da)
}

pub fn swap_block_family(lambda1: f64, lambda2: f64) -> Result<OperatorFamily> {
    swap_block_family_with(lambda1, lambda2, SwapProfile::default())
}

/// The 2x2 swap block on `[0, 1]`: `a = diag(λ1, λ2)` plus an off-diagonal
/// coupling `iφ'(t) e^{i(λ1-λ2)t}` whose evolution rotates `e1` onto `e2`.
pub fn swap_block_family_with(
    lambda1: f64,
    lambda2: f64,
    profile: SwapProfile,
) -> Result<OperatorFamily> {
    if !(lambda1.is_finite() && lambda2.is_finite()) {
        return Err(Error::invalid("lambda", "must be finite"));
    }
    let eval: MatrixFn = Arc::new(move |t| {
        HermitianMatrix::from_hermitian_part(swap_block_matrix(lambda1, lambda2, profile, t).0)
    });
    let derivative: MatrixFn = Arc::new(move |t| {
        HermitianMatrix::from_hermitian_part(swap_block_matrix(lambda1, lambda2, profile, t).1)
    });
    OperatorFamily::new(
        2,
        1.0,
        format!("swap-block({lambda1},{lambda2}{})", profile.label_suffix()),
        eval,
        Some(derivative),
        FamilyOptions::default(),
    )
}

pub fn counterexample_family(lambdas: &[f64]) -> Result<OperatorFamily> {
    counterexample_family_with(lambdas, SwapProfile::default())
}

/// Direct sum of the swap blocks `swap(-λ_i, λ_i)`, dimension `2m`, `T = 1`.
pub fn counterexample_family_with(lambdas: &[f64], profile: SwapProfile) -> Result<OperatorFamily> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambdas", "need at least one block"));
    }
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l.is_finite() && l > 0.0)) {
        return Err(Error::invalid(
            "lambdas",
            format!("must be strictly positive, got {bad}"),
        ));
    }
    let lambdas: Arc<[f64]> = lambdas.into();
    let m = lambdas.len();
    let assemble = move |lambdas: &[f64], t: f64, derivative: bool| {
        let mut out = CMatrix::zeros(2 * m, 2 * m);
        for (k, &l) in lambdas.iter().enumerate() {
            let (a, da) = swap_block_matrix(-l, l, profile, t);
            let block = if derivative { da } else { a };
            out.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&block);
        }
        HermitianMatrix::from_hermitian_part(out)
    };
    let l1 = lambdas.clone();
    let eval: MatrixFn = Arc::new(move |t| assemble(&l1, t, false));
    let l2 = lambdas.clone();
    let derivative: MatrixFn = Arc::new(move |t| assemble(&l2, t, true));
    OperatorFamily::new(
        2 * m,
        1.0,
        format!("counterexample(m={m}{})", profile.label_suffix()),
        eval,
        Some(derivative),
        FamilyOptions::default(),
    )
}

/// Orthogonal projection onto the (snapped) kernel of a Hermitian matrix.
fn kernel_projection(h: &HermitianMatrix, tol: &Tolerances) -> Result<Option<HermitianMatrix>> {
    let spec = eigh(h)?;
    let mask: Vec<bool> = spec
        .eigenvalues
        .iter()
        .map(|&l| l.abs() <= tol.tau_0)
        .collect();
    if !mask.iter().any(|&b| b) {
        return Ok(None);
    }
    let mut p = CMatrix::zeros(h.dim(), h.dim());
    for (j, _) in mask.iter().enumerate().filter(|(_, &b)| b) {
        let v = spec.eigenvectors.column(j);
        p += v * v.adjoint();
    }
    Ok(Some(HermitianMatrix::from_hermitian_part(p)))
}

/// `B(t) = A(t) + χ(t) P0(A(0)) + χ(T - t) P0(A(T))`, where `P0` projects onto
/// the kernel and `χ` is a plateau bump of width `εT`.
///
/// The perturbation pushes kernel vectors at the endpoints to eigenvalue 1
/// (up to `τ0`) and leaves `A` untouched on `[εT, T - εT]`.
pub fn endpoint_regularize(
    f: &OperatorFamily,
    eps: f64,
    tol: &Tolerances,
) -> Result<OperatorFamily> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid(
            "eps",
            format!("must lie in (0, 1/2), got {eps}"),
        ));
    }
    let horizon = f.horizon();
    let start = kernel_projection(&f.eval(0.0), tol)?;
    let end = kernel_projection(&f.eval(horizon), tol)?;
    if start.is_none() && end.is_none() {
        return Ok(f.clone());
    }
    let chi = PlateauBump::new(eps * horizon);
    let base = f.clone();
    let (s0, e0) = (start.clone(), end.clone());
    let eval: MatrixFn = Arc::new(move |t| {
        let mut b = base.eval(t);
        if let Some(p) = &s0 {
            let c = chi.value(t);
            if c != 0.0 {
                b = &b + &(p * c);
            }
        }
        if let Some(p) = &e0 {
            let c = chi.value(horizon - t);
            if c != 0.0 {
                b = &b + &(p * c);
            }
        }
        b
    });
    let derivative = f.has_derivative().then(|| {
        let base = f.clone();
        Arc::new(move |t: f64| {
            let mut d = base.derivative(t).expect("derivative present");
            if let Some(p) = &start {
                let c = chi.derivative(t);
                if c != 0.0 {
                    d = &d + &(p * c);
                }
            }
            if let Some(p) = &end {
                let c = chi.derivative(horizon - t);
                if c != 0.0 {
                    d = &d - &(p * c);
                }
            }
            d
        }) as MatrixFn
    });
    OperatorFamily::new(
        f.dim(),
        horizon,
        format!("regularized({})", f.label()),
        eval,
        derivative,
        FamilyOptions::default(),
    )
}

/// Hermitian matrix with i.i.d. Gaussian entries scaled by `1/sqrt(n)`
/// (spectral norm of order 2).
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HermitianMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        let d: f64 = rng.sample(StandardNormal);
        m[(i, i)] = C64::new(d * scale, 0.0);
        for j in i + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = C64::new(re, im) * (scale / std::f64::consts::SQRT_2);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    HermitianMatrix::from_hermitian_part(m)
}

/// `A(t) = A0 + tB + sin(πt)C` on `[0, 1]` with random Hermitian parts drawn
/// from a ChaCha8 stream seeded by `seed`.
pub fn random_smooth_family(n: usize, seed: u64) -> Result<OperatorFamily> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a0 = random_hermitian(n, &mut rng);
    let b = random_hermitian(n, &mut rng);
    let c = random_hermitian(n, &mut rng);
    let (b2, c2) = (b.clone(), c.clone());
    let pi = std::f64::consts::PI;
    let eval: MatrixFn = Arc::new(move |t| &(&a0 + &(&b * t)) + &(&c * (pi * t).sin()));
    let derivative: MatrixFn = Arc::new(move |t| &b2 + &(&c2 * (pi * (pi * t).cos())));
    OperatorFamily::new(
        n,
        1.0,
        format!("random(n={n},seed={seed})"),
        eval,
        Some(derivative),
        FamilyOptions::default(),
    )
}
