//! Indices of `d/dt - iA` and `d/dt + A` on `[0, T]` under APS boundary
//! conditions `f(0) ∈ H_<0(0)`, `f(T) ∈ H_≥0(T)`, and the equality checks
//! against the spectral flow.
//!
//! Lorentzian indices come from the evolved endpoint projection, either as a
//! projection pair or through subspace geometry. Riemannian indices come from
//! a Crank-Nicolson discretization of the boundary-value operator or from
//! shooting with the non-unitary evolution. In finite dimensions every index
//! equals `rank P_<0(0) - rank P_<0(T)` by dimension count; the kernel and
//! cokernel dimensions and the agreement between routes are what carry
//! information.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    check_stiffness, closed_form_counterexample_propagator, evolved_projection, evolved_unitary,
    nonunitary_propagate, propagate, Propagator, StepScheme,
};
use crate::families::{
    counterexample_family_with, endpoint_regularize, OperatorFamily, SwapProfile,
};
use crate::index::{IndexDiagnostics, IndexMethod, IndexReport};
use crate::linalg::{
    distance, eigh, principal_cosines, rank_kernel, relative_index, spectral_projection,
    subspace_intersection, unitarity_defect, CMatrix, HermitianMatrix, Interval, Subspace, C64,
};
use crate::parallel::map_range;
use crate::spectral_flow::{check_conjugation, spectral_flow, ConjugationRecord, FlowOptions};
use crate::tolerance::Tolerances;

/// Boundary subspaces `H_<0(0)` and `H_≥0(T)` with their complements.
#[derive(Clone, Debug)]
pub struct ApsBoundaryData {
    pub left_subspace: Subspace,
    pub right_subspace: Subspace,
    left_complement: Subspace,
    right_complement: Subspace,
}

impl ApsBoundaryData {
    pub fn new(f: &OperatorFamily, tol: &Tolerances) -> Result<Self> {
        Self::from_endpoints(&f.eval(0.0), &f.eval(f.horizon()), tol)
    }

    pub fn from_endpoints(
        start: &HermitianMatrix,
        end: &HermitianMatrix,
        tol: &Tolerances,
    ) -> Result<Self> {
        let s0 = eigh(start)?;
        let s1 = eigh(end)?;
        Ok(ApsBoundaryData {
            left_subspace: spectral_projection(&s0, &Interval::negative(), tol)?
                .range()
                .clone(),
            left_complement: spectral_projection(&s0, &Interval::nonnegative(), tol)?
                .range()
                .clone(),
            right_subspace: spectral_projection(&s1, &Interval::nonnegative(), tol)?
                .range()
                .clone(),
            right_complement: spectral_projection(&s1, &Interval::negative(), tol)?
                .range()
                .clone(),
        })
    }

    /// `H_≥0(0)`.
    pub fn left_complement(&self) -> &Subspace {
        &self.left_complement
    }

    /// `H_<0(T)`.
    pub fn right_complement(&self) -> &Subspace {
        &self.right_complement
    }

    /// Distance of `[left | left^⊥]` and `[right^⊥ | right]` from unitaries.
    pub fn complementarity_defect(&self) -> f64 {
        let join = |a: &Subspace, b: &Subspace| {
            let n = a.ambient_dim();
            let mut m = CMatrix::zeros(n, a.dim() + b.dim());
            m.columns_mut(0, a.dim()).copy_from(a.basis());
            m.columns_mut(a.dim(), b.dim()).copy_from(b.basis());
            if m.ncols() != n {
                return f64::INFINITY;
            }
            unitarity_defect(&m)
        };
        join(&self.left_subspace, &self.left_complement)
            .max(join(&self.right_complement, &self.right_subspace))
    }

    /// `rank P_<0(0) - rank P_<0(T)`.
    pub fn dimension_count(&self) -> i64 {
        self.left_subspace.dim() as i64 - self.right_complement.dim() as i64
    }
}

fn dimension_note(index: i64) -> String {
    format!(
        "index = rank P<0(0) - rank P<0(T) = {index} holds by dimension count in finite dimensions"
    )
}

/// Sine of the largest principal angle still counted as intersecting.
pub fn angle_rank_threshold(tol: &Tolerances) -> f64 {
    (tol.tau_angle * (2.0 - tol.tau_angle)).sqrt()
}

/// Lorentzian index on `[0, t_end]` as the relative index of
/// `(P_<0(0), P̂_<0(t_end))`.
pub fn lorentzian_index_projection(
    f: &OperatorFamily,
    p: &Propagator,
    t_end: f64,
    tol: &Tolerances,
) -> Result<IndexReport> {
    let p0 = spectral_projection(&eigh(&f.eval(0.0))?, &Interval::negative(), tol)?;
    let phat = evolved_projection(f, p, t_end, &Interval::negative(), tol)?;
    let mut report = relative_index(&p0, &phat, tol)?;
    report.diagnostics.notes.push(dimension_note(report.index));
    let band = angle_rank_threshold(tol);
    if report
        .diagnostics
        .singular_values
        .iter()
        .any(|&s| s > tol.tau_rank && s <= band)
    {
        report.diagnostics.warnings.push(format!(
            "a singular value lies in ({:.1e}, {band:.1e}], where the projection and subspace routes may disagree; \
             refine the propagator",
            tol.tau_rank
        ));
    }
    Ok(report)
}

/// Lorentzian index on `[0, t_end]` from subspace geometry:
/// `ker = dim(H_<0(0) ∩ Q(0,t) H_≥0(t))`, `coker = rank P_<0(t) - rank(P_<0(t) Q(t,0)|H_<0(0))`.
///
/// The rank of the compression counts singular values above the sine of the
/// intersection angle threshold, so that both dimensions use the same notion
/// of "numerically intersecting".
pub fn lorentzian_index_subspace(
    f: &OperatorFamily,
    p: &Propagator,
    t_end: f64,
    tol: &Tolerances,
) -> Result<IndexReport> {
    let u = p.at(t_end)?;
    let start = ApsBoundaryData::from_endpoints(&f.eval(0.0), &f.eval(t_end), tol)?;
    let left = &start.left_subspace;
    let pulled = start.right_subspace.transformed(&u.adjoint());
    let cosines = principal_cosines(left, &pulled)?;
    let ker = subspace_intersection(left, &pulled, tol.tau_angle)?.dim();

    let neg_end = start.right_complement();
    let compression = neg_end.basis().adjoint() * u * left.basis();
    let singular_values: Vec<f64> = if compression.is_empty() {
        Vec::new()
    } else {
        compression
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect()
    };
    let threshold = angle_rank_threshold(tol);
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();
    let coker = neg_end.dim() - rank;

    let mut diagnostics = IndexDiagnostics {
        singular_values,
        principal_cosines: cosines,
        ..Default::default()
    };
    let report_index = ker as i64 - coker as i64;
    diagnostics
        .notes
        .push(dimension_note(start.dimension_count()));
    if report_index != start.dimension_count() {
        diagnostics.warnings.push(format!(
            "kernel from principal angles ({ker}) and cokernel from the compression rank ({coker}) are inconsistent"
        ));
    }
    let near = |c: f64| c < 1.0 - tol.tau_angle && c > 1.0 - 1e3 * tol.tau_angle;
    if diagnostics.principal_cosines.iter().any(|&c| near(c)) {
        diagnostics.warnings.push(
            "ill-determined intersection: a principal cosine lies just below the threshold"
                .to_string(),
        );
    }
    Ok(IndexReport::new(
        ker,
        coker,
        IndexMethod::SubspaceGeometry,
        diagnostics,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorentzianCheckpoint {
    pub t: f64,
    pub sfl: i64,
    pub projection: IndexReport,
    pub subspace: IndexReport,
    /// `index = sfl` on `[0, t]`.
    pub equal: bool,
    /// Both routes give the same `(ker, coker, index)`.
    pub methods_agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LorentzianMainRecord {
    pub family: String,
    pub checkpoints: Vec<LorentzianCheckpoint>,
    pub pass: bool,
}

/// Grid indices of `count` checkpoints spread over the grid, ending at `T`.
pub fn checkpoint_indices(intervals: usize, count: usize) -> Vec<usize> {
    let count = count.clamp(1, intervals);
    let mut idx: Vec<usize> = (1..=count)
        .map(|j| ((j * intervals) as f64 / count as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

/// `ind(D_APS on [0, t]) = sfl(A|[0, t])` at `checkpoints` grid points.
pub fn lorentzian_main_check(
    f: &OperatorFamily,
    p: &Propagator,
    checkpoints: usize,
    flow: &FlowOptions,
    tol: &Tolerances,
) -> Result<LorentzianMainRecord> {
    let idx = checkpoint_indices(p.intervals(), checkpoints);
    let results: Vec<Result<LorentzianCheckpoint>> = map_range(flow.mode, idx.len(), |j| {
        let t = p.grid()[idx[j]];
        let sfl = spectral_flow(&f.restrict(0.0, t)?, flow, tol)?.value;
        let projection = lorentzian_index_projection(f, p, t, tol)?;
        let subspace = lorentzian_index_subspace(f, p, t, tol)?;
        Ok(LorentzianCheckpoint {
            t,
            sfl,
            equal: projection.index == sfl,
            methods_agree: projection.triple() == subspace.triple(),
            projection,
            subspace,
        })
    });
    let checkpoints = results.into_iter().collect::<Result<Vec<_>>>()?;
    let pass = checkpoints.iter().all(|c| c.equal && c.methods_agree);
    if !pass {
        log::error!("{}: Lorentzian index and spectral flow disagree", f.label());
    }
    Ok(LorentzianMainRecord {
        family: f.label().to_string(),
        checkpoints,
        pass,
    })
}

/// Compare `A` with the evolved family `Â(t) = Q(0,t) A(t) Q(t,0)`.
pub fn evolved_conjugation_check(
    f: &OperatorFamily,
    p: &Propagator,
    samples: usize,
    flow: &FlowOptions,
    tol: &Tolerances,
) -> Result<ConjugationRecord> {
    let hat = crate::evolution::evolved_family(f, p)?;
    let u = evolved_unitary(f, p);
    check_conjugation(f, &hat, |t| unitarity_defect(&u(t)), samples, flow, tol)
}

/// Choice of rank computation for the discretized Riemannian operator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BvpSolver {
    /// SVD of the full operator.
    Dense,
    /// Eliminate interior unknowns and decide the rank on `C^n`.
    Condensed,
    /// Dense up to [`DENSE_ROW_LIMIT`] rows, condensed above.
    #[default]
    Auto,
}

pub const DENSE_ROW_LIMIT: usize = 128;

/// Crank-Nicolson discretization of `∂_t + A` on the APS domain.
///
/// Unknowns: coefficients of `f_0` in a basis of `H_<0(0)`, the interior
/// slices `f_1 .. f_{M-1}`, and coefficients of `f_M` in a basis of
/// `H_≥0(T)`. Row block `k` is `(f_{k+1} - f_k)/h + A(t_{k+1/2})(f_{k+1} + f_k)/2`.
#[derive(Clone, Debug)]
pub struct BvpOperator {
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub steps: usize,
    /// `rank P_≥0(0)`.
    pub r1: usize,
    /// `rank P_<0(T)`.
    pub r2: usize,
    pub triplets: Vec<(usize, usize, C64)>,
    boundary: ApsBoundaryData,
}

pub fn assemble_bvp(f: &OperatorFamily, steps: usize, tol: &Tolerances) -> Result<BvpOperator> {
    if steps < 4 {
        return Err(Error::invalid(
            "M",
            format!("need at least 4 steps, got {steps}"),
        ));
    }
    check_stiffness(f)?;
    let n = f.dim();
    let boundary = ApsBoundaryData::new(f, tol)?;
    let k0 = boundary.left_subspace.dim();
    let kt = boundary.right_subspace.dim();
    let rows = steps * n;
    let cols = k0 + (steps - 1) * n + kt;
    let h = f.horizon() / steps as f64;
    let mut triplets = Vec::new();
    let push_block =
        |triplets: &mut Vec<(usize, usize, C64)>, r0: usize, c0: usize, b: &CMatrix| {
            for j in 0..b.ncols() {
                for i in 0..b.nrows() {
                    let z = b[(i, j)];
                    if z != C64::new(0.0, 0.0) {
                        triplets.push((r0 + i, c0 + j, z));
                    }
                }
            }
        };
    let slice_col = |k: usize| k0 + (k - 1) * n;
    for k in 0..steps {
        let a = f.eval((k as f64 + 0.5) * h);
        let half = a.as_matrix() * C64::new(0.5, 0.0);
        let id = CMatrix::identity(n, n) * C64::new(1.0 / h, 0.0);
        let next = &id + &half;
        let prev = -(&id - &half);
        let r0 = k * n;
        if k == 0 {
            push_block(
                &mut triplets,
                r0,
                0,
                &(&prev * boundary.left_subspace.basis()),
            );
        } else {
            push_block(&mut triplets, r0, slice_col(k), &prev);
        }
        if k + 1 == steps {
            push_block(
                &mut triplets,
                r0,
                k0 + (steps - 1) * n,
                &(&next * boundary.right_subspace.basis()),
            );
        } else {
            push_block(&mut triplets, r0, slice_col(k + 1), &next);
        }
    }
    Ok(BvpOperator {
        rows,
        cols,
        dim: n,
        steps,
        r1: boundary.left_complement().dim(),
        r2: boundary.right_complement().dim(),
        triplets,
        boundary,
    })
}

impl BvpOperator {
    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for &(i, j, z) in &self.triplets {
            m[(i, j)] = z;
        }
        m
    }

    /// Text dump: a header line `rows cols nnz`, then `row col re im` per
    /// nonzero (zero-based indices).
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {} {}", self.rows, self.cols, self.triplets.len()).map_err(io)?;
        for &(i, j, z) in &self.triplets {
            writeln!(w, "{i} {j} {:e} {:e}", z.re, z.im).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Smallest singular values around the rank cut kept in diagnostics.
const REPORTED_SINGULAR_VALUES: usize = 8;

fn trailing(values: &[f64], rank: usize) -> Vec<f64> {
    let start = rank.saturating_sub(REPORTED_SINGULAR_VALUES / 2);
    values
        .iter()
        .skip(start)
        .take(REPORTED_SINGULAR_VALUES)
        .copied()
        .collect()
}

/// Index of the discretized Riemannian operator with `M = steps` slices.
pub fn riemannian_index_discretized(
    f: &OperatorFamily,
    steps: usize,
    solver: BvpSolver,
    tol: &Tolerances,
) -> Result<IndexReport> {
    let op = assemble_bvp(f, steps, tol)?;
    let use_dense = match solver {
        BvpSolver::Dense => true,
        BvpSolver::Condensed => false,
        BvpSolver::Auto => op.rows <= DENSE_ROW_LIMIT,
    };
    let condensed = if use_dense {
        None
    } else {
        condensed_rank(f, &op, tol)
    };
    let (ker, coker, rk, route) = match condensed {
        Some((rk, ker, coker)) => (ker, coker, rk, "condensed"),
        None => {
            let rk = rank_kernel(&op.to_dense(), tol.tau_rank_relative);
            let ker = op.cols - rk.rank;
            let coker = op.rows - rk.rank;
            (ker, coker, rk, "dense")
        }
    };
    let mut diagnostics = IndexDiagnostics {
        singular_values: trailing(&rk.singular_values, rk.rank),
        gap_ratio: rk.gap_ratio,
        ..Default::default()
    };
    diagnostics.notes.push(format!(
        "M = {steps}, {route} rank; operator {}x{}, r1 = {}, r2 = {}",
        op.rows, op.cols, op.r1, op.r2
    ));
    diagnostics
        .notes
        .push(dimension_note(op.boundary.dimension_count()));
    if let Some(w) = rk.warning {
        diagnostics.warnings.push(w.message);
    }
    Ok(IndexReport::new(
        ker,
        coker,
        IndexMethod::DiscretizedBvp,
        diagnostics,
    ))
}

/// Schur-complement route: transport a basis of `H_<0(0)` with the
/// Crank-Nicolson one-step maps and decide `rank [Y | basis H_≥0(T)]`. Returns
/// `None` when a one-step map is singular.
fn condensed_rank(
    f: &OperatorFamily,
    op: &BvpOperator,
    tol: &Tolerances,
) -> Option<(crate::linalg::RankKernel, usize, usize)> {
    let n = op.dim;
    let h = f.horizon() / op.steps as f64;
    let mut y = op.boundary.left_subspace.basis().clone();
    for k in 0..op.steps {
        if y.ncols() == 0 {
            break;
        }
        let a = f.eval((k as f64 + 0.5) * h);
        let half = a.as_matrix() * C64::new(0.5, 0.0);
        let id = CMatrix::identity(n, n) * C64::new(1.0 / h, 0.0);
        let rhs = (&id - &half) * &y;
        y = (&id + &half).lu().solve(&rhs)?;
        y = y.qr().q();
    }
    let k0 = y.ncols();
    let kt = op.boundary.right_subspace.dim();
    let mut joined = CMatrix::zeros(n, k0 + kt);
    joined.columns_mut(0, k0).copy_from(&y);
    joined
        .columns_mut(k0, kt)
        .copy_from(op.boundary.right_subspace.basis());
    let rk = rank_kernel(&joined, tol.tau_rank_relative);
    let ker = k0 + kt - rk.rank;
    let coker = n - rk.rank;
    Some((rk, ker, coker))
}

/// Grid used by the shooting method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShootingGrid {
    pub intervals: usize,
    pub steps_per_interval: usize,
}

impl Default for ShootingGrid {
    fn default() -> Self {
        ShootingGrid {
            intervals: 64,
            steps_per_interval: 8,
        }
    }
}

struct Shot {
    ker: usize,
    cosines: Vec<f64>,
    condition: f64,
    warnings: Vec<String>,
}

fn shoot(f: &OperatorFamily, grid: ShootingGrid, tol: &Tolerances) -> Result<Shot> {
    let r = nonunitary_propagate(f, grid.intervals, grid.steps_per_interval)?;
    let boundary = ApsBoundaryData::new(f, tol)?;
    let left = &boundary.left_subspace;
    let image = if left.dim() == 0 {
        Subspace::empty(f.dim())
    } else {
        let moved = r.last() * left.basis();
        Subspace::new(moved.qr().q())
            .unwrap_or_else(|_| Subspace::span(&(r.last() * left.basis()), 0.0))
    };
    let cosines = principal_cosines(&image, &boundary.right_subspace)?;
    let ker = subspace_intersection(&image, &boundary.right_subspace, tol.tau_angle)?.dim();
    Ok(Shot {
        ker,
        cosines,
        condition: r.max_condition_number(),
        warnings: r.warnings,
    })
}

/// Kernel of the Riemannian operator from `R(T,0) H_<0(0) ∩ H_≥0(T)`; the
/// cokernel is the kernel of the adjoint problem, which after `t ↦ T - t` is
/// the same kind of problem for the reversed family.
pub fn riemannian_kernel_shooting(
    f: &OperatorFamily,
    grid: ShootingGrid,
    tol: &Tolerances,
) -> Result<IndexReport> {
    let forward = shoot(f, grid, tol)?;
    let adjoint = shoot(&f.reversed(), grid, tol)?;
    let mut diagnostics = IndexDiagnostics {
        principal_cosines: forward.cosines,
        condition_number: Some(forward.condition.max(adjoint.condition)),
        ..Default::default()
    };
    diagnostics.warnings.extend(forward.warnings);
    diagnostics.warnings.extend(adjoint.warnings);
    diagnostics.notes.push(format!(
        "{} intervals x {} steps; cokernel from the time-reversed adjoint problem",
        grid.intervals, grid.steps_per_interval
    ));
    Ok(IndexReport::new(
        forward.ker,
        adjoint.ker,
        IndexMethod::OdeShooting,
        diagnostics,
    ))
}

/// Families with `max |A| T` at most this are treated as well conditioned and
/// cross-checked by shooting.
pub const WELL_CONDITIONED_STIFFNESS: f64 = 10.0;

/// Default width `ε` of the endpoint perturbation.
pub const DEFAULT_REGULARIZATION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularizedRecord {
    pub sfl: i64,
    pub discretized: IndexReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiemannianMainRecord {
    pub family: String,
    pub stiffness: f64,
    pub sfl: i64,
    pub discretized: IndexReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shooting: Option<IndexReport>,
    pub singular_endpoints: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regularized: Option<RegularizedRecord>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiemannianOptions {
    /// Number of Crank-Nicolson slices `M`.
    pub steps: usize,
    pub solver: BvpSolver,
    pub shooting: ShootingGrid,
    /// Width `ε` of the endpoint perturbation, as a fraction of `T`.
    pub regularization: f64,
}

impl Default for RiemannianOptions {
    fn default() -> Self {
        RiemannianOptions {
            steps: 64,
            solver: BvpSolver::Auto,
            shooting: ShootingGrid::default(),
            regularization: DEFAULT_REGULARIZATION,
        }
    }
}

fn has_singular_endpoint(f: &OperatorFamily, tol: &Tolerances) -> Result<bool> {
    for t in [0.0, f.horizon()] {
        if eigh(&f.eval(t))?
            .eigenvalues
            .iter()
            .any(|l| l.abs() <= tol.tau_0)
        {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `ind(D_APS) = sfl(A)` for `∂_t + A`, repeated on the endpoint-regularized
/// family when an endpoint is singular.
pub fn riemannian_main_check(
    f: &OperatorFamily,
    opts: &RiemannianOptions,
    flow: &FlowOptions,
    tol: &Tolerances,
) -> Result<RiemannianMainRecord> {
    let stiffness = check_stiffness(f)?;
    let sfl = spectral_flow(f, flow, tol)?.value;
    let discretized = riemannian_index_discretized(f, opts.steps, opts.solver, tol)?;
    let shooting = if stiffness <= WELL_CONDITIONED_STIFFNESS {
        Some(riemannian_kernel_shooting(f, opts.shooting, tol)?)
    } else {
        None
    };
    let singular_endpoints = has_singular_endpoint(f, tol)?;
    let regularized = if singular_endpoints {
        let b = endpoint_regularize(f, opts.regularization, tol)?;
        Some(RegularizedRecord {
            sfl: spectral_flow(&b, flow, tol)?.value,
            discretized: riemannian_index_discretized(&b, opts.steps, opts.solver, tol)?,
        })
    } else {
        None
    };
    let mut pass = discretized.index == sfl;
    if let Some(s) = &shooting {
        pass &= s.ker_dim == discretized.ker_dim && s.coker_dim == discretized.coker_dim;
    }
    if let Some(r) = &regularized {
        pass &= r.sfl == sfl && r.discretized.index == sfl;
    }
    if !pass {
        log::error!("{}: Riemannian index check failed", f.label());
    }
    Ok(RiemannianMainRecord {
        family: f.label().to_string(),
        stiffness,
        sfl,
        discretized,
        shooting,
        singular_endpoints,
        regularized,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub family: String,
    pub steps: Vec<usize>,
    pub ker_dims: Vec<usize>,
    pub coker_dims: Vec<usize>,
    pub stable: bool,
}

/// Kernel and cokernel dimensions of the discretized operator for several `M`.
pub fn riemannian_stability(
    f: &OperatorFamily,
    steps: &[usize],
    solver: BvpSolver,
    tol: &Tolerances,
) -> Result<StabilityRecord> {
    let mut ker_dims = Vec::with_capacity(steps.len());
    let mut coker_dims = Vec::with_capacity(steps.len());
    for &m in steps {
        let r = riemannian_index_discretized(f, m, solver, tol)?;
        ker_dims.push(r.ker_dim);
        coker_dims.push(r.coker_dim);
    }
    let stable =
        ker_dims.windows(2).all(|w| w[0] == w[1]) && coker_dims.windows(2).all(|w| w[0] == w[1]);
    Ok(StabilityRecord {
        family: f.label().to_string(),
        steps: steps.to_vec(),
        ker_dims,
        coker_dims,
        stable,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthOptions {
    pub intervals: usize,
    pub steps_per_interval: usize,
    pub scheme: StepScheme,
    pub profile: SwapProfile,
}

impl Default for GrowthOptions {
    fn default() -> Self {
        GrowthOptions {
            intervals: 64,
            steps_per_interval: 64,
            scheme: StepScheme::FourthOrderCommutatorFree,
            profile: SwapProfile::Quintic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRow {
    pub m: usize,
    pub ker_dim: usize,
    pub coker_dim: usize,
    pub index: i64,
    pub sfl: i64,
    pub subspace_ker_dim: usize,
    pub subspace_coker_dim: usize,
    pub closed_form_deviation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    pub pass: bool,
}

/// Kernel growth of the Lorentzian operator for the counterexample with
/// `m` blocks, `λ_i = i`.
pub fn counterexample_growth(
    sizes: &[usize],
    opts: &GrowthOptions,
    flow: &FlowOptions,
    tol: &Tolerances,
) -> Result<GrowthTable> {
    let lambdas_for = |m: usize| -> Vec<f64> { (1..=m).map(|i| i as f64).collect() };
    counterexample_growth_with(
        &sizes.iter().map(|&m| lambdas_for(m)).collect::<Vec<_>>(),
        opts,
        flow,
        tol,
    )
}

/// Growth table for explicit block parameters.
pub fn counterexample_growth_with(
    blocks: &[Vec<f64>],
    opts: &GrowthOptions,
    flow: &FlowOptions,
    tol: &Tolerances,
) -> Result<GrowthTable> {
    let rows: Vec<Result<GrowthRow>> = map_range(flow.mode, blocks.len(), |j| {
        let lambdas = &blocks[j];
        let m = lambdas.len();
        let f = counterexample_family_with(lambdas, opts.profile)?;
        let p = propagate(&f, opts.intervals, opts.steps_per_interval, opts.scheme)?;
        let exact = closed_form_counterexample_propagator(lambdas, opts.profile, 1.0)?;
        let closed_form_deviation = distance(p.at(1.0)?, &exact);
        let projection = lorentzian_index_projection(&f, &p, 1.0, tol)?;
        let subspace = lorentzian_index_subspace(&f, &p, 1.0, tol)?;
        let sfl = spectral_flow(&f, flow, tol)?.value;
        let pass = projection.ker_dim == m
            && projection.coker_dim == m
            && projection.index == 0
            && sfl == 0
            && subspace.triple() == projection.triple()
            && closed_form_deviation <= tol.closed_form;
        Ok(GrowthRow {
            m,
            ker_dim: projection.ker_dim,
            coker_dim: projection.coker_dim,
            index: projection.index,
            sfl,
            subspace_ker_dim: subspace.ker_dim,
            subspace_coker_dim: subspace.coker_dim,
            closed_form_deviation,
            pass,
        })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(GrowthTable { rows, pass })
}
