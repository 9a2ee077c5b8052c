#![allow(dead_code)]

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specflow::families::{
    random_hermitian, random_smooth_family, FamilyOptions, MatrixFn, OperatorFamily,
};
use specflow::linalg::{eigvalsh, HermitianMatrix};

/// Random smooth family shifted by `(1 - t) a + t b` times the identity so
/// that `A(0)` and `A(1)` each have an exactly zero eigenvalue (up to
/// rounding). Which eigenvalues are pinned depends on the seed.
pub fn singular_endpoint_family(n: usize, seed: u64) -> OperatorFamily {
    let base = random_smooth_family(n, seed).unwrap();
    let ev0 = eigvalsh(&base.eval(0.0)).unwrap();
    let ev1 = eigvalsh(&base.eval(1.0)).unwrap();
    let a = ev0[(seed as usize) % n];
    let b = ev1[(seed as usize / 3) % n];
    let id = HermitianMatrix::identity(n);
    let (f, i1) = (base.clone(), id.clone());
    let eval: MatrixFn = Arc::new(move |t| &f.eval(t) - &(&i1 * ((1.0 - t) * a + t * b)));
    let g = base.clone();
    let derivative: MatrixFn = Arc::new(move |t| &g.derivative(t).unwrap() - &(&id * (b - a)));
    OperatorFamily::new(
        n,
        1.0,
        format!("singular(n={n},seed={seed})"),
        eval,
        Some(derivative),
        FamilyOptions::default(),
    )
    .unwrap()
}

/// `exp(iH)` for a random Hermitian `H`.
pub fn random_unitary(n: usize, seed: u64) -> specflow::linalg::CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hermitian(n, &mut rng);
    specflow::linalg::exp_i_hermitian(&h, 1.0).unwrap()
}
