mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specflow::aps::{
    assemble_bvp, lorentzian_index_projection, lorentzian_index_subspace,
    riemannian_index_discretized, BvpSolver,
};
use specflow::evolution::{
    closed_form_counterexample_propagator, closed_form_swap_propagator, evolved_family,
    evolved_projection, propagate, StepScheme,
};
use specflow::families::{
    counterexample_family_with, endpoint_regularize, random_hermitian, random_smooth_family,
    swap_block_family_with, swap_block_matrix, SwapProfile,
};
use specflow::linalg::{
    distance, eigh, eigvalsh, max_abs, relative_index, spectral_projection, subspace_intersection,
    CMatrix, HermitianMatrix, Interval, Subspace, C64,
};
use specflow::spectral_flow::{spectral_flow, spectral_flow_refined, FlowOptions};
use specflow::Tolerances;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn flow() -> FlowOptions {
    FlowOptions::default()
}

fn dims() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![1usize, 2, 3, 4, 6, 8])
}

fn profiles() -> impl Strategy<Value = SwapProfile> {
    prop::sample::select(vec![SwapProfile::Quintic, SwapProfile::BoundedSlope])
}

fn hermitian(n: usize, seed: u64) -> HermitianMatrix {
    random_hermitian(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projections_are_orthogonal_and_complementary(n in dims(), seed in any::<u64>()) {
        let s = eigh(&hermitian(n, seed)).unwrap();
        let neg = spectral_projection(&s, &Interval::negative(), &tol()).unwrap();
        let pos = spectral_projection(&s, &Interval::nonnegative(), &tol()).unwrap();
        for p in [&neg, &pos] {
            let (idem, herm, trace) = p.defects();
            prop_assert!(idem < 1e-12 && herm < 1e-12 && trace < 1e-12);
        }
        let sum = neg.matrix().as_matrix() + pos.matrix().as_matrix();
        prop_assert!(max_abs(&(sum - CMatrix::identity(n, n))) < 1e-12);
        prop_assert_eq!(neg.rank() + pos.rank(), n);
    }

    #[test]
    fn relative_index_is_rank_difference(n in dims(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = spectral_projection(&eigh(&hermitian(n, s1)).unwrap(), &Interval::negative(), &tol()).unwrap();
        let q = spectral_projection(&eigh(&hermitian(n, s2)).unwrap(), &Interval::negative(), &tol()).unwrap();
        let pq = relative_index(&p, &q, &tol()).unwrap();
        let qp = relative_index(&q, &p, &tol()).unwrap();
        prop_assert_eq!(pq.index, p.rank() as i64 - q.rank() as i64);
        prop_assert_eq!(pq.index, -qp.index);
        prop_assert_eq!(relative_index(&p, &p, &tol()).unwrap().triple(), (0, 0, 0));
    }

    #[test]
    fn intersection_dimension_is_symmetric(n in 3usize..8, common in 0usize..3, extra in 0usize..3, seed in any::<u64>()) {
        // Planted shared directions, rotated by a random unitary.
        let u = common::random_unitary(n, seed);
        let common_dim = common.min(n - 1);
        let a_extra = extra.min(n - common_dim);
        let b_extra = (n - common_dim - a_extra).min(1);
        let a_cols: Vec<usize> = (0..common_dim + a_extra).collect();
        let mut b_cols: Vec<usize> = (0..common_dim).collect();
        b_cols.extend((n - b_extra)..n);
        let a = Subspace::coordinate(n, &a_cols).transformed(&u);
        let b = Subspace::coordinate(n, &b_cols).transformed(&u);
        let ab = subspace_intersection(&a, &b, tol().tau_angle).unwrap().dim();
        let ba = subspace_intersection(&b, &a, tol().tau_angle).unwrap().dim();
        prop_assert_eq!(ab, ba);
        let overlap = if b_extra == 1 && common_dim + a_extra == n { 1 } else { 0 };
        prop_assert_eq!(ab, common_dim + overlap);
    }

    #[test]
    fn swap_coupling_vanishes_at_ends_and_is_bounded(l1 in -4.0f64..4.0, l2 in -4.0f64..4.0, t in 0.0f64..=1.0, profile in profiles()) {
        for end in [0.0, 1.0] {
            let (a, _) = swap_block_matrix(l1, l2, profile, end);
            prop_assert_eq!(a[(0, 1)], C64::new(0.0, 0.0));
        }
        let (a, _) = swap_block_matrix(l1, l2, profile, t);
        prop_assert!(a[(0, 1)].norm() <= profile.max_slope() + 1e-12);
    }

    #[test]
    fn counterexample_is_block_diagonal(m in 1usize..6, t in 0.0f64..=1.0, profile in profiles()) {
        let lambdas: Vec<f64> = (1..=m).map(|i| i as f64 * 0.7).collect();
        let f = counterexample_family_with(&lambdas, profile).unwrap();
        let a = f.eval(t);
        for i in 0..2 * m {
            for j in 0..2 * m {
                if i / 2 != j / 2 {
                    prop_assert_eq!(a.as_matrix()[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn regularization_is_local_and_invertible(n in 1usize..6, seed in any::<u64>(), eps in 0.05f64..0.45, t in 0.0f64..=1.0) {
        let f = common::singular_endpoint_family(n, seed);
        let b = endpoint_regularize(&f, eps, &tol()).unwrap();
        if t >= eps && t <= 1.0 - eps {
            let (bt, ft) = (b.eval(t), f.eval(t));
            prop_assert_eq!(bt.as_matrix(), ft.as_matrix());
        }
        for end in [0.0, 1.0] {
            let min = eigvalsh(&b.eval(end)).unwrap().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(min >= tol().tau_0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sfl_is_additive(n in dims(), seed in any::<u64>(), split in 0.05f64..0.95) {
        let f = random_smooth_family(n, seed).unwrap();
        let whole = spectral_flow(&f, &flow(), &tol()).unwrap().value;
        let left = spectral_flow(&f.restrict(0.0, split).unwrap(), &flow(), &tol()).unwrap().value;
        let right = spectral_flow(&f.restrict(split, 1.0).unwrap(), &flow(), &tol()).unwrap().value;
        prop_assert_eq!(whole, left + right);
    }

    #[test]
    fn sfl_reverses_sign_and_ignores_refinement(n in dims(), seed in any::<u64>()) {
        let f = random_smooth_family(n, seed).unwrap();
        let report = spectral_flow(&f, &flow(), &tol()).unwrap();
        let reversed = spectral_flow(&f.reversed(), &flow(), &tol()).unwrap().value;
        prop_assert_eq!(reversed, -report.value);
        prop_assert_eq!(spectral_flow_refined(&f, &flow(), &tol()).unwrap().value, report.value);
        let rank = |t: f64| eigh(&f.eval(t)).unwrap().count_negative(&tol()) as i64;
        prop_assert_eq!(report.value, rank(0.0) - rank(1.0));
    }

    #[test]
    fn propagator_structure(n in dims(), seed in any::<u64>(), intervals in 2usize..24, spi in 1usize..12, fourth in any::<bool>()) {
        let f = random_smooth_family(n, seed).unwrap();
        let scheme = if fourth { StepScheme::FourthOrderCommutatorFree } else { StepScheme::MidpointExponential };
        let p = propagate(&f, intervals, spi, scheme).unwrap();
        let d = p.structure();
        prop_assert!(d.unitarity <= 1e-10 && d.cocycle <= 1e-9 && d.isometry <= 1e-10, "{:?}", d);
    }

    #[test]
    fn evolved_family_has_the_same_spectrum(n in dims(), seed in any::<u64>(), k in 0usize..=16) {
        let f = random_smooth_family(n, seed).unwrap();
        let p = propagate(&f, 16, 4, StepScheme::MidpointExponential).unwrap();
        let hat = evolved_family(&f, &p).unwrap();
        let t = k as f64 / 16.0;
        let a = eigvalsh(&f.eval(t)).unwrap();
        let b = eigvalsh(&hat.eval(t)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn lorentzian_routes_agree(n in dims(), seed in any::<u64>(), k in 1usize..=16) {
        let f = random_smooth_family(n, seed).unwrap();
        let p = propagate(&f, 16, 16, StepScheme::MidpointExponential).unwrap();
        let t = k as f64 / 16.0;
        let a = lorentzian_index_projection(&f, &p, t, &tol()).unwrap();
        let b = lorentzian_index_subspace(&f, &p, t, &tol()).unwrap();
        prop_assert_eq!(a.triple(), b.triple());
        let p0 = spectral_projection(&eigh(&f.eval(0.0)).unwrap(), &Interval::negative(), &tol()).unwrap();
        let hat0 = evolved_projection(&f, &p, 0.0, &Interval::negative(), &tol()).unwrap();
        let hat_t = evolved_projection(&f, &p, t, &Interval::negative(), &tol()).unwrap();
        prop_assert_eq!(
            relative_index(&hat0, &hat_t, &tol()).unwrap().triple(),
            relative_index(&p0, &hat_t, &tol()).unwrap().triple()
        );
    }

    #[test]
    fn riemannian_index_is_additive(n in 1usize..5, seed in any::<u64>(), split in 0.2f64..0.8) {
        let f = random_smooth_family(n, seed).unwrap();
        let min_abs = eigvalsh(&f.eval(split)).unwrap().iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        prop_assume!(min_abs > 1e-3);
        let whole = riemannian_index_discretized(&f, 64, BvpSolver::Auto, &tol()).unwrap().index;
        let left = riemannian_index_discretized(&f.restrict(0.0, split).unwrap(), 64, BvpSolver::Auto, &tol()).unwrap().index;
        let right = riemannian_index_discretized(&f.restrict(split, 1.0).unwrap(), 64, BvpSolver::Auto, &tol()).unwrap().index;
        prop_assert_eq!(whole, left + right);
    }

    #[test]
    fn bvp_dimensions(n in 1usize..6, seed in any::<u64>(), m in 4usize..40) {
        let f = random_smooth_family(n, seed).unwrap();
        let op = assemble_bvp(&f, m, &tol()).unwrap();
        prop_assert_eq!(op.rows, m * n);
        prop_assert_eq!(op.cols, (m + 1) * n - op.r1 - op.r2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn swap_blocks_match_closed_form(l1 in -4.0f64..4.0, l2 in -4.0f64..4.0, profile in profiles()) {
        let f = swap_block_family_with(l1, l2, profile).unwrap();
        let p = propagate(&f, 64, 64, StepScheme::FourthOrderCommutatorFree).unwrap();
        for k in [16usize, 32, 64] {
            let t = k as f64 / 64.0;
            let exact = closed_form_swap_propagator(l1, l2, profile, t).unwrap();
            prop_assert!(distance(p.at(t).unwrap(), &exact) <= 1e-6);
        }
    }

    #[test]
    fn block_sums_match_closed_form(lambdas in prop::collection::vec(0.1f64..3.0, 1..4)) {
        let mut lambdas = lambdas;
        lambdas.sort_by(f64::total_cmp);
        let f = counterexample_family_with(&lambdas, SwapProfile::Quintic).unwrap();
        let p = propagate(&f, 64, 64, StepScheme::FourthOrderCommutatorFree).unwrap();
        let exact = closed_form_counterexample_propagator(&lambdas, SwapProfile::Quintic, 1.0).unwrap();
        prop_assert!(distance(p.at(1.0).unwrap(), &exact) <= 1e-6);
    }
}
