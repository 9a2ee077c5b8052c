//! Flow partitions and the spectral flow of a Hermitian family.
//!
//! The spectral flow is the sum over a flow partition `0 = t_0 < ... < t_N = T`
//! with levels `a_n >= 0` of `Dim H_[0,a_n)(t_n) - Dim H_[0,a_n)(t_{n-1})`,
//! where zero counts as nonnegative. Partitions are found by adaptive
//! bisection: a segment is accepted once a level clears every sampled
//! spectrum by at least `r = max(γ_min, safety · L · Δ / 2)`, with `L` a bound
//! on `|A'|` over the segment and `Δ` the sample spacing. Since eigenvalues are
//! `L`-Lipschitz, such a level cannot be crossed between samples.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{OperatorFamily, UnitaryFn};
use crate::index::IndexReport;
use crate::linalg::{
    eigh, eigvalsh, relative_index, spectral_projection, unitarity_defect, Interval,
};
use crate::parallel::{map_range, ExecMode};
use crate::tolerance::Tolerances;

/// Knobs of the partition search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowOptions {
    /// Samples per candidate segment, endpoints included.
    pub n_samples: usize,
    /// Multiplier on the Lipschitz drift `L Δ / 2` in the clearance bound.
    pub safety: f64,
    /// Bisection stops with an error below `T · min_width_fraction`.
    pub min_width_fraction: f64,
    #[serde(skip)]
    pub mode: ExecMode,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            n_samples: 17,
            safety: 2.0,
            min_width_fraction: 2f64.powi(-20),
            mode: ExecMode::default(),
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::invalid("n_samples", "must be at least 2"));
        }
        if !(self.safety >= 1.0 && self.safety.is_finite()) {
            return Err(Error::invalid("safety", "must be a finite number >= 1"));
        }
        if !(self.min_width_fraction > 0.0 && self.min_width_fraction < 1.0) {
            return Err(Error::invalid("min_width_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// How a segment's level was certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Sampled spectra plus a drift bound from `|A'(t)|` (Weyl).
    Lipschitz,
    /// Drift bound from finite differences of `A` only.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowPartition {
    pub points: Vec<f64>,
    pub levels: Vec<f64>,
    /// Minimal sampled distance from `a_n` to the spectrum on segment `n`.
    pub witness_gaps: Vec<f64>,
    pub certificates: Vec<Certificate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FlowPartition {
    pub fn segments(&self) -> usize {
        self.levels.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossingDirection {
    Up,
    Down,
    /// The eigenvalue stayed within `10 τ0` of zero on consecutive samples.
    Dwell,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossingEvent {
    pub t: f64,
    pub eigenvalue_index: usize,
    pub lambda: f64,
    pub direction: CrossingDirection,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SflReport {
    pub value: i64,
    pub partition: FlowPartition,
    pub per_segment_terms: Vec<i64>,
    pub crossing_log: Vec<CrossingEvent>,
}

impl SflReport {
    pub fn write_crossing_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "eigenvalue_index", "lambda", "direction"])?;
        for e in &self.crossing_log {
            let dir = match e.direction {
                CrossingDirection::Up => "up",
                CrossingDirection::Down => "down",
                CrossingDirection::Dwell => "dwell",
            };
            w.write_record([
                e.t.to_string(),
                e.eigenvalue_index.to_string(),
                e.lambda.to_string(),
                dir.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Sampled spectra of one segment.
struct SegmentSamples {
    times: Vec<f64>,
    spectra: Vec<Vec<f64>>,
    drift_bound: f64,
    certificate: Certificate,
}

fn sample_segment(
    f: &OperatorFamily,
    a: f64,
    b: f64,
    opts: &FlowOptions,
) -> Result<SegmentSamples> {
    let n = opts.n_samples;
    let times: Vec<f64> = (0..n)
        .map(|j| {
            if j + 1 == n {
                b
            } else {
                a + (b - a) * j as f64 / (n - 1) as f64
            }
        })
        .collect();
    let lipschitz = f.has_derivative();
    let evaluated: Vec<Result<(Vec<f64>, f64)>> = map_range(opts.mode, n, |j| {
        let t = times[j];
        let spectrum = eigvalsh(&f.eval(t))?;
        let speed = if lipschitz {
            f.derivative(t).expect("derivative present").norm()
        } else {
            0.0
        };
        Ok((spectrum, speed))
    });
    let mut spectra = Vec::with_capacity(n);
    let mut drift_bound = 0.0_f64;
    for r in evaluated {
        let (s, speed) = r?;
        drift_bound = drift_bound.max(speed);
        spectra.push(s);
    }
    let certificate = if lipschitz {
        Certificate::Lipschitz
    } else {
        // Weyl: |λ_j(t) - λ_j(s)| <= |A(t) - A(s)|; consecutive sorted
        // spectra give a lower bound on the local speed.
        let dt = (b - a) / (n - 1) as f64;
        for w in spectra.windows(2) {
            let jump = w[0]
                .iter()
                .zip(&w[1])
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            drift_bound = drift_bound.max(jump / dt);
        }
        Certificate::Sampled
    };
    Ok(SegmentSamples {
        times,
        spectra,
        drift_bound,
        certificate,
    })
}

/// Lowest admissible level for a segment, if any, with its clearance.
fn select_level(samples: &SegmentSamples, clearance: f64) -> Option<f64> {
    let mut values: Vec<f64> = samples.spectra.iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut bounds = Vec::with_capacity(values.len() + 1);
    let mut lo = f64::NEG_INFINITY;
    for &v in &values {
        bounds.push((lo, v));
        lo = v;
    }
    bounds.push((lo, f64::INFINITY));
    for (lo, hi) in bounds {
        if hi <= 0.0 {
            continue;
        }
        let candidate = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo + (0.5 * lo.abs()).max(2.0 * clearance),
            (false, true) => hi - (0.5 * hi.abs()).max(2.0 * clearance),
            (false, false) => 0.0,
        };
        let min = (lo + clearance).max(0.0);
        let max = hi - clearance;
        if min <= max {
            return Some(candidate.clamp(min, max));
        }
    }
    None
}

fn witness_gap(samples: &SegmentSamples, level: f64) -> f64 {
    samples
        .spectra
        .iter()
        .flatten()
        .map(|&l| (l - level).abs())
        .fold(f64::INFINITY, f64::min)
}

struct AcceptedSegment {
    start: f64,
    end: f64,
    level: f64,
    gap: f64,
    samples: SegmentSamples,
}

fn try_segment(
    f: &OperatorFamily,
    a: f64,
    b: f64,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<(Option<(f64, f64)>, SegmentSamples)> {
    let samples = sample_segment(f, a, b, opts)?;
    let spacing = (b - a) / (opts.n_samples - 1) as f64;
    let clearance = tol
        .gamma_min
        .max(opts.safety * samples.drift_bound * spacing / 2.0);
    let level = select_level(&samples, clearance).map(|l| (l, witness_gap(&samples, l)));
    Ok((level, samples))
}

fn build(
    f: &OperatorFamily,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<(Vec<AcceptedSegment>, Vec<String>)> {
    opts.validate()?;
    let horizon = f.horizon();
    let min_width = horizon * opts.min_width_fraction;
    let mut accepted = Vec::new();
    let mut warnings = Vec::new();
    let mut stack = vec![(0.0, horizon)];
    while let Some((a, b)) = stack.pop() {
        let (level, samples) = try_segment(f, a, b, opts, tol)?;
        match level {
            Some((level, gap)) => {
                if samples.certificate == Certificate::Sampled {
                    let spacing = (b - a) / (opts.n_samples - 1) as f64;
                    if samples.drift_bound * spacing > tol.gamma_min / 2.0 {
                        warnings.push(format!(
                            "segment [{a}, {b}]: eigenvalue speed estimate {:.3e} times sample spacing {spacing:.3e} \
                             exceeds gamma_min/2; level certified on samples only",
                            samples.drift_bound
                        ));
                    }
                }
                accepted.push(AcceptedSegment {
                    start: a,
                    end: b,
                    level,
                    gap,
                    samples,
                });
            }
            None => {
                if b - a <= min_width {
                    return Err(Error::NoAdmissibleLevel { start: a, end: b });
                }
                let mid = 0.5 * (a + b);
                stack.push((mid, b));
                stack.push((a, mid));
            }
        }
    }
    for w in &warnings {
        log::warn!("{}: {w}", f.label());
    }
    Ok((accepted, warnings))
}

fn partition_of(segments: &[AcceptedSegment], warnings: Vec<String>) -> FlowPartition {
    let mut points = vec![0.0];
    points.extend(segments.iter().map(|s| s.end));
    FlowPartition {
        points,
        levels: segments.iter().map(|s| s.level).collect(),
        witness_gaps: segments.iter().map(|s| s.gap).collect(),
        certificates: segments.iter().map(|s| s.samples.certificate).collect(),
        warnings,
    }
}

/// Adaptive flow partition of `f` on `[0, T]`.
pub fn build_flow_partition(
    f: &OperatorFamily,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<FlowPartition> {
    let (segments, warnings) = build(f, opts, tol)?;
    Ok(partition_of(&segments, warnings))
}

fn count_zero_to(spectrum: &[f64], level: f64, tol: &Tolerances) -> i64 {
    spectrum
        .iter()
        .map(|&l| tol.snap(l))
        .filter(|&l| l >= 0.0 && l < level)
        .count() as i64
}

fn crossing_log(segments: &[AcceptedSegment], tol: &Tolerances) -> Vec<CrossingEvent> {
    let mut samples: Vec<(f64, &Vec<f64>)> = Vec::new();
    for s in segments {
        for (t, spec) in s.samples.times.iter().zip(&s.samples.spectra) {
            if samples.last().is_some_and(|(last, _)| *last == *t) {
                continue;
            }
            samples.push((*t, spec));
        }
    }
    let dwell_band = 10.0 * tol.tau_0;
    let mut log = Vec::new();
    let Some(n) = samples.first().map(|(_, s)| s.len()) else {
        return log;
    };
    let mut dwelling = vec![false; n];
    for w in samples.windows(2) {
        let ((_, prev), (t, next)) = (w[0], w[1]);
        for j in 0..n {
            let (p, q) = (tol.snap(prev[j]), tol.snap(next[j]));
            if p < 0.0 && q >= 0.0 {
                log.push(CrossingEvent {
                    t,
                    eigenvalue_index: j,
                    lambda: next[j],
                    direction: CrossingDirection::Up,
                });
            } else if p >= 0.0 && q < 0.0 {
                log.push(CrossingEvent {
                    t,
                    eigenvalue_index: j,
                    lambda: next[j],
                    direction: CrossingDirection::Down,
                });
            }
            let both_small = prev[j].abs() <= dwell_band && next[j].abs() <= dwell_band;
            if both_small && !dwelling[j] {
                log.push(CrossingEvent {
                    t,
                    eigenvalue_index: j,
                    lambda: next[j],
                    direction: CrossingDirection::Dwell,
                });
            }
            dwelling[j] = both_small;
        }
    }
    log
}

fn report(segments: &[AcceptedSegment], warnings: Vec<String>, tol: &Tolerances) -> SflReport {
    let per_segment_terms: Vec<i64> = segments
        .iter()
        .map(|s| {
            let first = s.samples.spectra.first().expect("samples");
            let last = s.samples.spectra.last().expect("samples");
            count_zero_to(last, s.level, tol) - count_zero_to(first, s.level, tol)
        })
        .collect();
    SflReport {
        value: per_segment_terms.iter().sum(),
        crossing_log: crossing_log(segments, tol),
        partition: partition_of(segments, warnings),
        per_segment_terms,
    }
}

/// Spectral flow of `f` on `[0, T]`.
pub fn spectral_flow(
    f: &OperatorFamily,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<SflReport> {
    let (segments, warnings) = build(f, opts, tol)?;
    Ok(report(&segments, warnings, tol))
}

/// Spectral flow on a partition whose every segment has been bisected, with
/// levels re-selected on each half (the parent level is kept when a half has
/// no admissible level of its own).
pub fn spectral_flow_refined(
    f: &OperatorFamily,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<SflReport> {
    let (segments, warnings) = build(f, opts, tol)?;
    let mut refined = Vec::with_capacity(2 * segments.len());
    for s in segments {
        let mid = 0.5 * (s.start + s.end);
        for (a, b) in [(s.start, mid), (mid, s.end)] {
            let (level, samples) = try_segment(f, a, b, opts, tol)?;
            let (level, gap) = level.unwrap_or_else(|| (s.level, witness_gap(&samples, s.level)));
            refined.push(AcceptedSegment {
                start: a,
                end: b,
                level,
                gap,
                samples,
            });
        }
    }
    Ok(report(&refined, warnings, tol))
}

/// Spectral flow evaluated on a caller-supplied partition. Levels are not
/// re-certified; use for replaying a stored partition.
pub fn spectral_flow_on(
    f: &OperatorFamily,
    points: &[f64],
    levels: &[f64],
    tol: &Tolerances,
) -> Result<i64> {
    if points.len() != levels.len() + 1 {
        return Err(Error::DimensionMismatch {
            expected: levels.len() + 1,
            found: points.len(),
        });
    }
    let mut total = 0;
    for (w, &a) in points.windows(2).zip(levels) {
        let start = eigvalsh(&f.eval(w[0]))?;
        let end = eigvalsh(&f.eval(w[1]))?;
        total += count_zero_to(&end, a, tol) - count_zero_to(&start, a, tol);
    }
    Ok(total)
}

/// Record comparing the spectral flow with the relative index of the
/// endpoint negative projections.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowIndRecord {
    pub sfl: i64,
    pub index: IndexReport,
    pub rank_negative_start: usize,
    pub rank_negative_end: usize,
    pub equal: bool,
}

pub fn flowind_check(
    f: &OperatorFamily,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<FlowIndRecord> {
    let sfl = spectral_flow(f, opts, tol)?;
    let p0 = spectral_projection(&eigh(&f.eval(0.0))?, &Interval::negative(), tol)?;
    let p1 = spectral_projection(&eigh(&f.eval(f.horizon()))?, &Interval::negative(), tol)?;
    let index = relative_index(&p0, &p1, tol)?;
    let equal = sfl.value == index.index;
    if !equal {
        log::error!(
            "{}: spectral flow {} differs from relative index {}",
            f.label(),
            sfl.value,
            index.index
        );
    }
    Ok(FlowIndRecord {
        sfl: sfl.value,
        rank_negative_start: p0.rank(),
        rank_negative_end: p1.rank(),
        index,
        equal,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugationRecord {
    pub sfl_original: i64,
    pub sfl_conjugated: i64,
    pub max_eigenvalue_deviation: f64,
    pub max_unitarity_defect: f64,
    pub samples: usize,
    pub equal: bool,
}

/// Compare `f` with `t ↦ U(t)* A(t) U(t)`: spectral flows and sorted spectra at
/// `samples + 1` uniform times.
pub fn sfl_conjugation_invariance_check(
    f: &OperatorFamily,
    u: UnitaryFn,
    samples: usize,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<ConjugationRecord> {
    let conjugated = f.conjugated(u.clone());
    check_conjugation(
        f,
        &conjugated,
        |t| unitarity_defect(&u(t)),
        samples,
        opts,
        tol,
    )
}

/// Shared core of the conjugation checks: `g` must be a unitary conjugate of
/// `f`, and `defect(t)` reports the unitarity defect of the conjugating
/// matrix.
pub fn check_conjugation(
    f: &OperatorFamily,
    g: &OperatorFamily,
    defect: impl Fn(f64) -> f64 + Sync + Send,
    samples: usize,
    opts: &FlowOptions,
    tol: &Tolerances,
) -> Result<ConjugationRecord> {
    let samples = samples.max(1);
    let horizon = f.horizon();
    let per_sample: Vec<Result<(f64, f64)>> = map_range(opts.mode, samples + 1, |k| {
        let t = horizon * k as f64 / samples as f64;
        let d = defect(t);
        if d > tol.unitarity {
            return Err(Error::NotUnitary { defect: d, t });
        }
        let a = eigvalsh(&f.eval(t))?;
        let b = eigvalsh(&g.eval(t))?;
        let dev = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        Ok((dev, d))
    });
    let mut max_dev = 0.0_f64;
    let mut max_defect = 0.0_f64;
    for r in per_sample {
        let (dev, d) = r?;
        max_dev = max_dev.max(dev);
        max_defect = max_defect.max(d);
    }
    let sfl_original = spectral_flow(f, opts, tol)?.value;
    let sfl_conjugated = spectral_flow(g, opts, tol)?.value;
    Ok(ConjugationRecord {
        sfl_original,
        sfl_conjugated,
        max_eigenvalue_deviation: max_dev,
        max_unitarity_defect: max_defect,
        samples: samples + 1,
        equal: sfl_original == sfl_conjugated && max_dev <= tol.spectrum_match,
    })
}

/// Sorted eigenvalues at `points + 1` uniform times.
pub fn eigenflow(
    f: &OperatorFamily,
    points: usize,
    mode: ExecMode,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let points = points.max(1);
    let horizon = f.horizon();
    map_range(mode, points + 1, |k| {
        let t = horizon * k as f64 / points as f64;
        eigvalsh(&f.eval(t)).map(|ev| (t, ev))
    })
    .into_iter()
    .collect()
}

/// CSV with columns `t, lambda_1, ..., lambda_n`.
pub fn write_eigenflow_csv(path: &Path, flow: &[(f64, Vec<f64>)]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let n = flow.first().map_or(0, |(_, ev)| ev.len());
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=n).map(|j| format!("lambda_{j}")))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(|e| Error::io(path, e))?;
    for (t, ev) in flow {
        let row: Vec<String> = std::iter::once(t.to_string())
            .chain(ev.iter().map(f64::to_string))
            .collect();
        writeln!(w, "{}", row.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{
        constant_family, counterexample_family, linear_family, swap_block_family,
    };
    use crate::linalg::HermitianMatrix;

    fn d(v: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(v)
    }

    fn crossing() -> OperatorFamily {
        linear_family(d(&[-0.5]), d(&[1.0]), 1.0).unwrap()
    }

    #[test]
    fn constant_family_single_segment_at_zero() {
        let f = constant_family(d(&[-1.0, 1.0]), 1.0).unwrap();
        let p = build_flow_partition(&f, &FlowOptions::default(), &Tolerances::default()).unwrap();
        assert_eq!(p.points, vec![0.0, 1.0]);
        assert_eq!(p.levels, vec![0.0]);
        assert_eq!(p.witness_gaps, vec![1.0]);
        let r = spectral_flow(&f, &FlowOptions::default(), &Tolerances::default()).unwrap();
        assert_eq!(r.value, 0);
        assert!(r.crossing_log.is_empty());
    }

    #[test]
    fn linear_crossing() {
        let f = crossing();
        let tol = Tolerances::default();
        let p = build_flow_partition(&f, &FlowOptions::default(), &tol).unwrap();
        assert_eq!(p.points, vec![0.0, 1.0]);
        assert!((p.levels[0] - 0.75).abs() < 1e-15);
        let r = spectral_flow(&f, &FlowOptions::default(), &tol).unwrap();
        assert_eq!(r.value, 1);
        assert_eq!(r.per_segment_terms, vec![1]);
        let up: Vec<_> = r
            .crossing_log
            .iter()
            .filter(|e| e.direction == CrossingDirection::Up)
            .collect();
        assert_eq!(up.len(), 1);
        assert_eq!(up[0].t, 0.5);
        let rec = flowind_check(&f, &FlowOptions::default(), &tol).unwrap();
        assert!(rec.equal);
        assert_eq!(
            (rec.sfl, rec.rank_negative_start, rec.rank_negative_end),
            (1, 1, 0)
        );
    }

    #[test]
    fn swap_block_keeps_level_zero() {
        let f = swap_block_family(-1.0, 1.0).unwrap();
        let p = build_flow_partition(&f, &FlowOptions::default(), &Tolerances::default()).unwrap();
        assert_eq!(p.segments(), 1);
        assert_eq!(p.levels, vec![0.0]);
        assert!(p.witness_gaps[0] >= 1.0 - 1e-12);
    }

    #[test]
    fn counterexample_has_no_flow() {
        let f = counterexample_family(&[1.0, 2.0, 3.0]).unwrap();
        let r = spectral_flow(&f, &FlowOptions::default(), &Tolerances::default()).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.value, r.per_segment_terms.iter().sum::<i64>());
    }

    #[test]
    fn refined_and_reversed() {
        let f = crossing();
        let tol = Tolerances::default();
        let o = FlowOptions::default();
        assert_eq!(spectral_flow_refined(&f, &o, &tol).unwrap().value, 1);
        assert_eq!(spectral_flow(&f.reversed(), &o, &tol).unwrap().value, -1);
        let p = build_flow_partition(&f, &o, &tol).unwrap();
        assert_eq!(spectral_flow_on(&f, &p.points, &p.levels, &tol).unwrap(), 1);
    }

    #[test]
    fn zero_counts_as_nonnegative() {
        // A(t) = t - 1/2 restricted to [0, 1/2] ends exactly at zero.
        let f = crossing().restrict(0.0, 0.5).unwrap();
        let tol = Tolerances::default();
        assert_eq!(
            spectral_flow(&f, &FlowOptions::default(), &tol)
                .unwrap()
                .value,
            1
        );
        // Starting at zero and increasing: no flow.
        let g = linear_family(d(&[0.0]), d(&[1.0]), 1.0).unwrap();
        assert_eq!(
            spectral_flow(&g, &FlowOptions::default(), &tol)
                .unwrap()
                .value,
            0
        );
    }

    #[test]
    fn pinned_eigenvalue_dwells() {
        let f = constant_family(d(&[0.0, 1.0]), 1.0).unwrap();
        let r = spectral_flow(&f, &FlowOptions::default(), &Tolerances::default()).unwrap();
        assert_eq!(r.value, 0);
        assert!(r
            .crossing_log
            .iter()
            .any(|e| e.direction == CrossingDirection::Dwell && e.eigenvalue_index == 0));
    }

    #[test]
    fn sampled_certificate_without_derivative() {
        let f = crossing();
        let g = f.conjugated(std::sync::Arc::new(|_| {
            crate::linalg::CMatrix::identity(1, 1)
        }));
        assert!(!g.has_derivative());
        let r = spectral_flow(&g, &FlowOptions::default(), &Tolerances::default()).unwrap();
        assert_eq!(r.value, 1);
        assert!(r
            .partition
            .certificates
            .iter()
            .all(|c| *c == Certificate::Sampled));
    }

    #[test]
    fn conjugation_by_constant_unitary() {
        let f = linear_family(
            HermitianMatrix::from_real_rows(&[&[-1.0, 0.2], &[0.2, 0.5]]).unwrap(),
            d(&[2.0, -1.0]),
            1.0,
        )
        .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = crate::linalg::real_matrix(&[&[s, s], &[s, -s]]);
        let rec = sfl_conjugation_invariance_check(
            &f,
            std::sync::Arc::new(move |_| h.clone()),
            32,
            &FlowOptions::default(),
            &Tolerances::default(),
        )
        .unwrap();
        assert!(rec.equal, "{rec:?}");
        let bad = crate::linalg::real_matrix(&[&[2.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            sfl_conjugation_invariance_check(
                &f,
                std::sync::Arc::new(move |_| bad.clone()),
                4,
                &FlowOptions::default(),
                &Tolerances::default()
            ),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn eigenflow_rows() {
        let flow = eigenflow(&crossing(), 100, ExecMode::Sequential).unwrap();
        assert_eq!(flow.len(), 101);
        assert_eq!(flow[50].1[0], 0.0);
    }

    #[test]
    fn crossing_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let r =
            spectral_flow(&crossing(), &FlowOptions::default(), &Tolerances::default()).unwrap();
        r.write_crossing_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,eigenvalue_index,lambda,direction\n"));
        assert!(text.contains("0.5,0,0,up"));
    }
}
