//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specflow::aps::{
    counterexample_growth, evolved_conjugation_check, lorentzian_main_check, riemannian_main_check,
    riemannian_stability, BvpSolver, GrowthOptions, RiemannianOptions,
};
use specflow::evolution::{
    cauchy_residual, cauchy_solve, closed_form_counterexample_propagator, convergence_study,
    propagate, Propagator, StepScheme, StructureDefects,
};
use specflow::families::{
    counterexample_family, random_hermitian, random_smooth_family, FamilyOptions, FamilySpec,
    OperatorFamily, SwapProfile,
};
use specflow::harness::{has_commuting_values, random_zoo, shipped_zoo};
use specflow::linalg::{distance, CVector, C64};
use specflow::spectral_flow::{flowind_check, FlowOptions};
use specflow::Tolerances;

const SEED: u64 = 0;
const RANDOM_COUNT: usize = 100;
const RANDOM_MAX_DIM: usize = 16;
const FLOWIND_BUDGET_S: f64 = 60.0;
const LORENTZIAN_BUDGET_S: f64 = 120.0;
const LORENTZIAN_STEPS: usize = 1 << 10;
const CHECKPOINTS: usize = 8;
const GROWTH_SIZES: [usize; 5] = [1, 2, 4, 8, 16];
const GROWTH_STEPS: usize = 1 << 12;
const CLOSED_FORM_TOL: f64 = 1e-6;
const UNITARITY_TOL: f64 = 1e-10;
const COCYCLE_TOL: f64 = 1e-9;
const ISOMETRY_TOL: f64 = 1e-10;
const MIDPOINT_RATIO: f64 = 4.0;
const MIDPOINT_RATIO_TOL: f64 = 0.5;
const RIEMANNIAN_STIFFNESS: f64 = 10.0;
const STABILITY_STEPS: [usize; 3] = [32, 64, 128];
const SINGULAR_FAMILIES: usize = 20;
const SPECTRUM_TOL: f64 = 1e-10;
const CAUCHY_FAMILIES: usize = 10;
const CAUCHY_TOL: f64 = 1e-9;
const CAUCHY_RATIO: (f64, f64) = (3.0, 5.0);

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Verdict { pass, detail }
    }
}

/// Acceptance tolerances, pinned independently of the library defaults.
fn tolerances() -> Tolerances {
    Tolerances {
        unitarity: UNITARITY_TOL,
        cocycle: COCYCLE_TOL,
        isometry: ISOMETRY_TOL,
        spectrum_match: SPECTRUM_TOL,
        cauchy_match: CAUCHY_TOL,
        closed_form: CLOSED_FORM_TOL,
        ..Tolerances::default()
    }
}

fn build(spec: &FamilySpec) -> OperatorFamily {
    spec.build(None, FamilyOptions::default())
        .expect("zoo family builds")
}

fn random_families() -> Vec<OperatorFamily> {
    random_zoo(SEED, RANDOM_COUNT, RANDOM_MAX_DIM)
        .iter()
        .map(build)
        .collect()
}

/// Worst structure defects seen across all propagators of the run.
#[derive(Default)]
struct StructureLog {
    worst: StructureDefects,
    propagators: usize,
}

impl StructureLog {
    fn record(&mut self, p: &Propagator) {
        let d = p.structure();
        self.worst.unitarity = self.worst.unitarity.max(d.unitarity);
        self.worst.cocycle = self.worst.cocycle.max(d.cocycle);
        self.worst.isometry = self.worst.isometry.max(d.isometry);
        self.propagators += 1;
    }
}

fn criterion_1(randoms: &[OperatorFamily], tol: &Tolerances, flow: &FlowOptions) -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    for f in randoms {
        match flowind_check(f, flow, tol) {
            Ok(r) if r.equal => {}
            Ok(r) => failures.push(format!(
                "{} (sfl {} vs index {})",
                f.label(),
                r.sfl,
                r.index.index
            )),
            Err(e) => failures.push(format!("{}: {e}", f.label())),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict::new(
        randoms.len() >= 100 && failures.is_empty() && secs < FLOWIND_BUDGET_S,
        format!(
            "sfl = relative index on {} random families, {} failures {:?}, {secs:.1}s (budget {FLOWIND_BUDGET_S}s)",
            randoms.len(),
            failures.len(),
            failures
        ),
    )
}

struct LorentzianSweep {
    main: Verdict,
    cross: Verdict,
    conjugation: Verdict,
}

/// Criteria 2, 3 and 8 share one propagator per family. Families with an
/// exact closed-form evolution have nontransversal endpoint subspaces and use
/// the fourth-order scheme; random families use the default scheme.
fn lorentzian_sweep(
    families: &[OperatorFamily],
    fourth_order: &[bool],
    tol: &Tolerances,
    flow: &FlowOptions,
    log: &mut StructureLog,
) -> LorentzianSweep {
    let start = Instant::now();
    let (mut main_fail, mut cross_fail, mut conj_fail) = (Vec::new(), Vec::new(), Vec::new());
    let mut checkpoints = 0;
    let mut worst_spectrum = 0.0_f64;
    let mut conj_time = 0.0;
    for (f, &cf4) in families.iter().zip(fourth_order) {
        let scheme = if cf4 {
            StepScheme::FourthOrderCommutatorFree
        } else {
            StepScheme::MidpointExponential
        };
        let p = match propagate(f, 64, LORENTZIAN_STEPS / 64, scheme) {
            Ok(p) => p,
            Err(e) => {
                main_fail.push(format!("{}: {e}", f.label()));
                continue;
            }
        };
        log.record(&p);
        match lorentzian_main_check(f, &p, CHECKPOINTS, flow, tol) {
            Ok(r) => {
                checkpoints += r.checkpoints.len();
                if r.checkpoints.len() != CHECKPOINTS || r.checkpoints.iter().any(|c| !c.equal) {
                    main_fail.push(f.label().to_string());
                }
                if r.checkpoints.iter().any(|c| !c.methods_agree) {
                    cross_fail.push(f.label().to_string());
                }
            }
            Err(e) => main_fail.push(format!("{}: {e}", f.label())),
        }
        let c0 = Instant::now();
        match evolved_conjugation_check(f, &p, 16, flow, tol) {
            Ok(r) => {
                worst_spectrum = worst_spectrum.max(r.max_eigenvalue_deviation);
                if !(r.sfl_original == r.sfl_conjugated
                    && r.max_eigenvalue_deviation <= SPECTRUM_TOL)
                {
                    conj_fail.push(f.label().to_string());
                }
            }
            Err(e) => conj_fail.push(format!("{}: {e}", f.label())),
        }
        conj_time += c0.elapsed().as_secs_f64();
    }
    let secs = start.elapsed().as_secs_f64() - conj_time;
    LorentzianSweep {
        main: Verdict::new(
            main_fail.is_empty() && secs < LORENTZIAN_BUDGET_S,
            format!(
                "Lorentzian index = sfl at {checkpoints} checkpoints over {} families, {LORENTZIAN_STEPS} steps, failures {main_fail:?}, {secs:.1}s (budget {LORENTZIAN_BUDGET_S}s)",
                families.len()
            ),
        ),
        cross: Verdict::new(
            cross_fail.is_empty(),
            format!("projection and subspace routes agree on {checkpoints} checkpoints, failures {cross_fail:?}"),
        ),
        conjugation: Verdict::new(
            conj_fail.is_empty(),
            format!(
                "evolved family: equal sfl and spectra within {SPECTRUM_TOL:e} on {} families (worst {worst_spectrum:.1e}), failures {conj_fail:?}",
                families.len()
            ),
        ),
    }
}

fn criterion_4(tol: &Tolerances, flow: &FlowOptions, log: &mut StructureLog) -> Verdict {
    // Step refinement: the 2^12-step propagator must already agree with the
    // 2^13-step one well inside the closed-form tolerance.
    let mut refinement = Vec::new();
    let mut refinement_ok = true;
    for &m in &GROWTH_SIZES {
        let lambdas: Vec<f64> = (1..=m).map(|i| i as f64).collect();
        let f = counterexample_family(&lambdas).expect("counterexample builds");
        let exact = closed_form_counterexample_propagator(&lambdas, SwapProfile::Quintic, 1.0)
            .expect("closed form");
        let coarse = propagate(
            &f,
            64,
            GROWTH_STEPS / 64,
            StepScheme::FourthOrderCommutatorFree,
        )
        .expect("propagates");
        let fine = propagate(
            &f,
            64,
            2 * GROWTH_STEPS / 64,
            StepScheme::FourthOrderCommutatorFree,
        )
        .expect("propagates");
        log.record(&coarse);
        log.record(&fine);
        let step_change = distance(coarse.at(1.0).unwrap(), fine.at(1.0).unwrap());
        let closed = distance(fine.at(1.0).unwrap(), &exact);
        refinement_ok &= step_change <= CLOSED_FORM_TOL / 10.0 && closed <= CLOSED_FORM_TOL / 10.0;
        refinement.push(format!("m={m}: {step_change:.1e}/{closed:.1e}"));
    }
    let opts = GrowthOptions {
        intervals: 64,
        steps_per_interval: GROWTH_STEPS / 64,
        scheme: StepScheme::FourthOrderCommutatorFree,
        profile: SwapProfile::Quintic,
    };
    let table = match counterexample_growth(&GROWTH_SIZES, &opts, flow, tol) {
        Ok(t) => t,
        Err(e) => return Verdict::new(false, format!("growth table failed: {e}")),
    };
    let rows_ok = table.rows.len() == GROWTH_SIZES.len()
        && table.rows.iter().zip(GROWTH_SIZES).all(|(r, m)| {
            r.m == m
                && r.ker_dim == m
                && r.coker_dim == m
                && r.index == 0
                && r.sfl == 0
                && r.closed_form_deviation <= CLOSED_FORM_TOL
        });
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "(m={}, ker={}, coker={}, ind={}, sfl={}, dev={:.1e})",
                r.m, r.ker_dim, r.coker_dim, r.index, r.sfl, r.closed_form_deviation
            )
        })
        .collect();
    Verdict::new(
        rows_ok && refinement_ok,
        format!(
            "rows {} ; step refinement 2^12 vs 2^13 / 2^13 vs closed form: {}",
            rows.join(" "),
            refinement.join(", ")
        ),
    )
}

fn criterion_5(shipped: &[(FamilySpec, OperatorFamily)], log: &StructureLog) -> Verdict {
    let w = &log.worst;
    let structure_ok =
        w.unitarity <= UNITARITY_TOL && w.cocycle <= COCYCLE_TOL && w.isometry <= ISOMETRY_TOL;
    let mut studied: Vec<&OperatorFamily> = shipped
        .iter()
        .filter(|(s, _)| !has_commuting_values(s) && !matches!(s, FamilySpec::Sampled { .. }))
        .map(|(_, f)| f)
        .collect();
    let randoms: Vec<OperatorFamily> = (0..4)
        .map(|i| random_smooth_family(2 + 2 * (i % 2), 500 + i as u64).unwrap())
        .collect();
    studied.extend(randoms.iter());
    let mut ratio_fail = Vec::new();
    let mut all_ratios = Vec::new();
    for f in &studied {
        match convergence_study(f, StepScheme::MidpointExponential, 16) {
            Ok(s) => {
                if s.ratios.len() != 3
                    || s.ratios
                        .iter()
                        .any(|r| (r - MIDPOINT_RATIO).abs() > MIDPOINT_RATIO_TOL)
                {
                    ratio_fail.push(format!("{} {:?}", f.label(), s.ratios));
                }
                all_ratios.extend(s.ratios);
            }
            Err(e) => ratio_fail.push(format!("{}: {e}", f.label())),
        }
    }
    let (lo, hi) = all_ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| {
            (a.min(r), b.max(r))
        });
    Verdict::new(
        structure_ok && ratio_fail.is_empty() && log.propagators > 0,
        format!(
            "worst over {} propagators: unitarity {:.1e}, cocycle {:.1e}, isometry {:.1e}; midpoint ratios in [{lo:.3}, {hi:.3}] on {} families, failures {ratio_fail:?}",
            log.propagators,
            w.unitarity,
            w.cocycle,
            w.isometry,
            studied.len()
        ),
    )
}

fn criterion_6(families: &[OperatorFamily], tol: &Tolerances, flow: &FlowOptions) -> Verdict {
    let eligible: Vec<&OperatorFamily> = families
        .iter()
        .filter(|f| f.stiffness(64) <= RIEMANNIAN_STIFFNESS)
        .collect();
    let opts = RiemannianOptions::default();
    let mut failures = Vec::new();
    let mut shooting_cases = 0;
    for f in &eligible {
        let record = match riemannian_main_check(f, &opts, flow, tol) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{}: {e}", f.label()));
                continue;
            }
        };
        if !record.pass {
            failures.push(format!(
                "{} (sfl {} vs index {})",
                f.label(),
                record.sfl,
                record.discretized.index
            ));
        }
        match &record.shooting {
            Some(s) => {
                shooting_cases += 1;
                if s.ker_dim != record.discretized.ker_dim {
                    failures.push(format!(
                        "{} shooting ker {} vs {}",
                        f.label(),
                        s.ker_dim,
                        record.discretized.ker_dim
                    ));
                }
            }
            None => failures.push(format!("{} has no shooting result", f.label())),
        }
        match riemannian_stability(f, &STABILITY_STEPS, BvpSolver::Auto, tol) {
            Ok(s) if s.stable => {}
            Ok(s) => failures.push(format!(
                "{} unstable ker {:?} coker {:?}",
                f.label(),
                s.ker_dims,
                s.coker_dims
            )),
            Err(e) => failures.push(format!("{}: {e}", f.label())),
        }
    }
    Verdict::new(
        failures.is_empty() && !eligible.is_empty(),
        format!(
            "{} of {} zoo families with |A|T <= {RIEMANNIAN_STIFFNESS}: index = sfl, dims stable over M {STABILITY_STEPS:?}, shooting ker matched on {shooting_cases}, failures {failures:?}",
            eligible.len(),
            families.len()
        ),
    )
}

fn criterion_7(tol: &Tolerances, flow: &FlowOptions) -> Verdict {
    let opts = RiemannianOptions::default();
    let mut failures = Vec::new();
    let mut checked = 0;
    for k in 0..SINGULAR_FAMILIES {
        let f = common::singular_endpoint_family(1 + k % 4, 900 + k as u64);
        let record = match riemannian_main_check(&f, &opts, flow, tol) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{}: {e}", f.label()));
                continue;
            }
        };
        checked += 1;
        match (&record.regularized, record.singular_endpoints) {
            (Some(r), true) => {
                if r.sfl != record.sfl || r.discretized.index != record.discretized.index {
                    failures.push(format!(
                        "{}: sfl {} -> {}, index {} -> {}",
                        f.label(),
                        record.sfl,
                        r.sfl,
                        record.discretized.index,
                        r.discretized.index
                    ));
                }
            }
            _ => failures.push(format!("{} not detected as singular", f.label())),
        }
    }
    Verdict::new(
        failures.is_empty() && checked >= SINGULAR_FAMILIES,
        format!("{checked} singular-endpoint families: sfl and Riemannian index unchanged by regularization, failures {failures:?}"),
    )
}

fn unit_vector(n: usize, seed: u64) -> CVector {
    let h = random_hermitian(n, &mut ChaCha8Rng::seed_from_u64(seed));
    let v = CVector::from_fn(n, |i, _| {
        h.as_matrix()[(i, (i + 1) % n)] + C64::new(1.0, 0.0)
    });
    let norm = v.norm();
    v.unscale(norm)
}

fn criterion_9(log: &mut StructureLog) -> Verdict {
    let mut failures = Vec::new();
    let mut worst_match = 0.0_f64;
    let mut ratios = Vec::new();
    for k in 0..CAUCHY_FAMILIES {
        let n = [2, 3, 4, 6, 8][k % 5];
        let f = random_smooth_family(n, 700 + k as u64).unwrap();
        let x = unit_vector(n, 11 + k as u64);
        let v = unit_vector(n, 23 + k as u64);
        let anchor = 0.5;
        let mut residuals = Vec::new();
        for intervals in [32, 64] {
            let p = propagate(&f, intervals, 16, StepScheme::MidpointExponential).unwrap();
            log.record(&p);
            let free = cauchy_solve(&p, anchor, &x, None).unwrap();
            for (t, value) in p.grid().iter().zip(&free.values) {
                let expected = p.q_between(*t, anchor).unwrap() * &x;
                worst_match = worst_match.max((value - expected).norm());
            }
            let g: Vec<CVector> = p
                .grid()
                .iter()
                .map(|&t| &v * C64::new((3.0 * t).cos(), (2.0 * t).sin()))
                .collect();
            let forced = cauchy_solve(&p, anchor, &x, Some(&g)).unwrap();
            residuals.push(cauchy_residual(&f, &forced, Some(&g)).unwrap());
        }
        let ratio = residuals[0] / residuals[1];
        if !(CAUCHY_RATIO.0..=CAUCHY_RATIO.1).contains(&ratio) {
            failures.push(format!("{} ratio {ratio:.3}", f.label()));
        }
        ratios.push(ratio);
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| {
            (a.min(r), b.max(r))
        });
    Verdict::new(
        failures.is_empty() && worst_match <= CAUCHY_TOL,
        format!(
            "{CAUCHY_FAMILIES} families: g = 0 matches Q(t,s)x to {worst_match:.1e} (tol {CAUCHY_TOL:e}), residual ratios under grid halving in [{lo:.3}, {hi:.3}], failures {failures:?}"
        ),
    )
}

fn main() -> ExitCode {
    // Under `cargo test -- --list` and similar, a custom harness must stay quiet.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let tol = tolerances();
    let flow = FlowOptions::default();
    let mut log = StructureLog::default();

    let randoms = random_families();
    let shipped: Vec<(FamilySpec, OperatorFamily)> = shipped_zoo()
        .into_iter()
        .map(|(name, spec)| {
            let f = build(&spec).with_label(name);
            (spec, f)
        })
        .collect();
    let mut zoo: Vec<OperatorFamily> = randoms.clone();
    zoo.extend(shipped.iter().map(|(_, f)| f.clone()));
    let fourth_order: Vec<bool> = std::iter::repeat_n(false, randoms.len())
        .chain(std::iter::repeat_n(true, shipped.len()))
        .collect();

    let c1 = criterion_1(&randoms, &tol, &flow);
    let sweep = lorentzian_sweep(&zoo, &fourth_order, &tol, &flow, &mut log);
    let c4 = criterion_4(&tol, &flow, &mut log);
    let c6 = criterion_6(&zoo, &tol, &flow);
    let c7 = criterion_7(&tol, &flow);
    let c9 = criterion_9(&mut log);
    let c5 = criterion_5(&shipped, &log);

    let verdicts = [
        (1, "flowind on random families", c1),
        (2, "Lorentzian index equals spectral flow", sweep.main),
        (3, "Lorentzian cross-method agreement", sweep.cross),
        (4, "counterexample kernel growth", c4),
        (5, "propagator structure and order", c5),
        (6, "Riemannian index equals spectral flow", c6),
        (7, "endpoint regularization", c7),
        (8, "conjugation invariance", sweep.conjugation),
        (9, "Cauchy well-posedness", c9),
    ];
    let mut all = true;
    for (id, name, v) in &verdicts {
        all &= v.pass;
        println!(
            "criterion {id} {}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
