//! Problem descriptions and critical-point machinery: locating the interior
//! maximizer of the unperturbed phase, tracking its perturbed counterpart as
//! `n` grows, checking the standing assumptions, and measuring drift rates.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{enumerate_multi_indices, MultiIndex, ScalarField};
use crate::harness::{fit_rate, RateFit};
use crate::symmat::{det_cofactor, SymMatrix};

/// Gradient-norm threshold at which Newton iteration stops.
pub const NEWTON_TOL: f64 = 1e-12;

/// Newton step budget.
pub const NEWTON_MAX_ITER: usize = 50;

/// Smallest damping factor tried before declaring a stall.
const NEWTON_MIN_DAMPING: f64 = 1.0 / (1u64 << 30) as f64;

/// Default scan density for grid searches and assumption checks.
pub const DEFAULT_GRID_PER_AXIS: usize = 41;

/// Total grid size cap; per-axis density shrinks to respect it.
const MAX_GRID_POINTS: u64 = 1_000_000;

/// `|det|` below this raises the determinant lower-bound warning.
pub const DET_FLOOR: f64 = 1e-8;

/// Threshold under which a derivative of the amplitude counts as zero.
pub const ZERO_TOL: f64 = 1e-9;

/// Drift sequences entirely below this are reported exact, not fitted.
pub const EXACT_DRIFT_FLOOR: f64 = 1e-14;

/// Eigenvalue tolerance for negative-definiteness checks.
const ND_TOL: f64 = 1e-10;

/// One Laplace-type problem: integrand `exp(n (h + eps_n sigma)) g` over the
/// open box, with perturbation size `eps_n = s n^{-p}`. `s = 0` encodes an
/// unperturbed phase and normalizes `p` to infinity.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    bounds: Vec<(f64, f64)>,
    pub h: ScalarField,
    pub sigma: ScalarField,
    pub g: ScalarField,
    p: f64,
    s: f64,
    k: u32,
}

impl ProblemSpec {
    pub fn new(
        bounds: Vec<(f64, f64)>,
        h: ScalarField,
        sigma: ScalarField,
        g: ScalarField,
        p: f64,
        s: f64,
        k: u32,
    ) -> Result<Self> {
        let dim = bounds.len();
        if dim == 0 {
            return Err(Error::InvalidProblem("box needs at least one axis".into()));
        }
        for &(a, b) in &bounds {
            if !a.is_finite() || !b.is_finite() || a >= b {
                return Err(Error::InvalidProblem(format!("degenerate box axis ({a}, {b})")));
            }
        }
        for (name, f) in [("h", &h), ("sigma", &sigma), ("g", &g)] {
            if f.dim() != dim {
                return Err(Error::InvalidProblem(format!(
                    "{name} has dimension {}, box has {dim}",
                    f.dim()
                )));
            }
        }
        if !s.is_finite() || s < 0.0 {
            return Err(Error::InvalidProblem(format!("perturbation size s = {s} must be >= 0")));
        }
        let p = if s == 0.0 {
            f64::INFINITY
        } else {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidProblem(format!("decay exponent p = {p} must be > 0")));
            }
            p
        };
        if !k.is_multiple_of(2) {
            return Err(Error::InvalidProblem(format!("vanishing order k = {k} must be even")));
        }
        if k > crate::fields::MAX_DEGREE {
            return Err(Error::InvalidProblem(format!(
                "vanishing order k = {k} exceeds cap {}",
                crate::fields::MAX_DEGREE
            )));
        }
        if h.max_derivative_order() < 3 || sigma.max_derivative_order() < 3 {
            return Err(Error::InvalidProblem(
                "phase and perturbation need derivatives up to order 3".into(),
            ));
        }
        if g.max_derivative_order() < (k + 1) as usize {
            return Err(Error::InvalidProblem(format!(
                "amplitude needs derivatives up to order {}",
                k + 1
            )));
        }
        Ok(ProblemSpec { bounds, h, sigma, g, p, s, k })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Decay exponent; `+inf` for unperturbed problems.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `eps_n = s n^{-p}`, exactly zero when `s = 0`.
    pub fn epsilon(&self, n: u64) -> f64 {
        if self.s == 0.0 {
            0.0
        } else {
            self.s * (n as f64).powf(-self.p)
        }
    }

    /// View of the perturbed phase `h + eps_n sigma` at a fixed `n`.
    pub fn phase(&self, n: u64) -> Phase<'_> {
        Phase { h: &self.h, sigma: &self.sigma, eps: self.epsilon(n) }
    }

    fn min_half_width(&self) -> f64 {
        self.bounds.iter().map(|&(a, b)| (b - a) / 2.0).fold(f64::INFINITY, f64::min)
    }

    fn default_margin(&self) -> f64 {
        0.05 * self.min_half_width()
    }
}

/// `h + eps sigma` with derivatives delegated to both parts. The perturbation
/// term is skipped entirely when `eps = 0`, so unperturbed phases are
/// bit-identical to `h`.
#[derive(Debug, Clone, Copy)]
pub struct Phase<'a> {
    h: &'a ScalarField,
    sigma: &'a ScalarField,
    eps: f64,
}

impl Phase<'_> {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eval_partial(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        let base = self.h.eval_partial(alpha, x)?;
        if self.eps == 0.0 {
            return Ok(base);
        }
        Ok(base + self.eps * self.sigma.eval_partial(alpha, x)?)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_partial(&MultiIndex::zero(self.h.dim()), x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let base = self.h.gradient(x)?;
        if self.eps == 0.0 {
            return Ok(base);
        }
        let pert = self.sigma.gradient(x)?;
        Ok(base.iter().zip(&pert).map(|(b, p)| b + self.eps * p).collect())
    }

    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let base = self.h.hessian(x)?;
        if self.eps == 0.0 {
            return Ok(base);
        }
        base.sub(&self.sigma.hessian(x)?.scale(-self.eps))
    }
}

/// Shared interface for the Newton engine: plain fields and perturbed phases.
trait Smooth {
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn hess(&self, x: &[f64]) -> Result<SymMatrix>;
}

impl Smooth for ScalarField {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.gradient(x)
    }
    fn hess(&self, x: &[f64]) -> Result<SymMatrix> {
        self.hessian(x)
    }
}

impl Smooth for Phase<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.eval(x)
    }
    fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.gradient(x)
    }
    fn hess(&self, x: &[f64]) -> Result<SymMatrix> {
        self.hessian(x)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Damped Newton ascent on the gradient. Steps solve `H s = -grad` through
/// the adjugate (dimensions are tiny), and the damping halves the step until
/// either the objective increases or the gradient norm contracts - the latter
/// keeps the endgame moving once objective differences sink below rounding.
fn newton_maximize(f: &impl Smooth, start: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut x = start.to_vec();
    for _ in 0..max_iter {
        let g = f.grad(&x)?;
        let gn = l2(&g);
        if gn < tol {
            return Ok(x);
        }
        let hess = f.hess(&x)?;
        let det = det_cofactor(&hess);
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularHessian);
        }
        let adj = hess.adjugate();
        let mut step = adj.mul_vec(&g)?;
        for v in &mut step {
            *v = -*v / det;
        }
        let f0 = f.value(&x)?;
        let mut t = 1.0;
        loop {
            let xt: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi + t * si).collect();
            let ft = f.value(&xt)?;
            if ft.is_finite() {
                let gt = l2(&f.grad(&xt)?);
                if ft > f0 || gt < 0.9 * gn {
                    x = xt;
                    break;
                }
            }
            t *= 0.5;
            if t < NEWTON_MIN_DAMPING {
                return Err(Error::NewtonNonConvergence { iterations: max_iter });
            }
        }
    }
    if l2(&f.grad(&x)?) < tol {
        Ok(x)
    } else {
        Err(Error::NewtonNonConvergence { iterations: max_iter })
    }
}

/// Walks every point of the uniform inclusive grid, invoking the callback
/// with coordinates and keeping allocation out of the hot loop.
fn for_each_grid_point(
    bounds: &[(f64, f64)],
    per_axis: usize,
    mut visit: impl FnMut(&[f64]) -> Result<()>,
) -> Result<()> {
    let dim = bounds.len();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let step: Vec<f64> = bounds.iter().map(|&(a, b)| (b - a) / (per_axis - 1) as f64).collect();
    loop {
        for i in 0..dim {
            x[i] = bounds[i].0 + idx[i] as f64 * step[i];
        }
        visit(&x)?;
        let mut axis = 0;
        loop {
            if axis == dim {
                return Ok(());
            }
            idx[axis] += 1;
            if idx[axis] < per_axis {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Shrinks the per-axis density until the full grid fits the point cap.
fn effective_grid(dim: usize, per_axis: usize) -> usize {
    let mut g = per_axis.max(3);
    while g > 3 && (g as u64).pow(dim as u32) > MAX_GRID_POINTS {
        g -= 1;
    }
    g
}

fn distance_to_boundary(bounds: &[(f64, f64)], x: &[f64]) -> f64 {
    bounds
        .iter()
        .zip(x)
        .map(|(&(a, b), &xi)| (xi - a).min(b - xi))
        .fold(f64::INFINITY, f64::min)
}

fn grid_then_newton(
    f: &impl Smooth,
    bounds: &[(f64, f64)],
    grid_per_axis: usize,
    margin: f64,
) -> Result<Vec<f64>> {
    let min_half = bounds.iter().map(|&(a, b)| (b - a) / 2.0).fold(f64::INFINITY, f64::min);
    if !(margin > 0.0 && margin < min_half) {
        return Err(Error::InvalidArgument(format!(
            "margin {margin} must sit in (0, {min_half})"
        )));
    }
    let g = effective_grid(bounds.len(), grid_per_axis);
    let mut best_val = f64::NEG_INFINITY;
    let mut best = vec![0.0; bounds.len()];
    for_each_grid_point(bounds, g, |x| {
        let v = f.value(x)?;
        if v > best_val {
            best_val = v;
            best.copy_from_slice(x);
        }
        Ok(())
    })?;
    if distance_to_boundary(bounds, &best) < margin {
        return Err(Error::BoundaryMaximum);
    }
    let refined = newton_maximize(f, &best, NEWTON_TOL, NEWTON_MAX_ITER)?;
    if distance_to_boundary(bounds, &refined) < margin {
        return Err(Error::BoundaryMaximum);
    }
    Ok(refined)
}

/// Grid scan plus damped Newton refinement of the interior maximizer.
/// Rejects fields whose best grid value sits within `margin` of the boundary.
pub fn find_max_interior(
    f: &ScalarField,
    bounds: &[(f64, f64)],
    grid_per_axis: usize,
    margin: f64,
) -> Result<Vec<f64>> {
    grid_then_newton(f, bounds, grid_per_axis, margin)
}

/// Newton-tracks the perturbed maximizer `c_n` from `start` (normally the
/// unperturbed maximizer or the previous `c_n`). The Hessian at the result
/// must be negative definite and the point must stay inside the open box.
pub fn track_c_n(prob: &ProblemSpec, n: u64, start: &[f64]) -> Result<Vec<f64>> {
    let phase = prob.phase(n);
    let c_n = newton_maximize(&phase, start, NEWTON_TOL, NEWTON_MAX_ITER)?;
    if distance_to_boundary(prob.bounds(), &c_n) <= 0.0 {
        return Err(Error::BoundaryMaximum);
    }
    if !phase.hessian(&c_n)?.is_negative_definite(ND_TOL)? {
        return Err(Error::NotNegativeDefinite);
    }
    Ok(c_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Pass,
    Warn,
    Fail,
}

/// Pass/warn/fail status per standing assumption. Warnings are advisory;
/// failures block the theorem experiment.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionFlags {
    /// Interior unique maximizer with nondegenerate Hessian.
    pub interior_unique_max: Flag,
    /// Perturbed maximizers interior with negative definite Hessians.
    pub perturbed_maximizers: Flag,
    /// `|det D2(h + eps_n sigma)|` bounded away from zero on the box.
    pub det_lower_bound: Flag,
    /// Order-2 and order-3 phase derivatives bounded on the box.
    pub deriv_bounds_finite: Flag,
    /// Squared eigenvalue mass at the perturbed maximizers stays positive.
    pub eigen_floor: Flag,
    /// Amplitude vanishing pattern: orders below `k` vanish, some even
    /// order-`k` derivative survives.
    pub amplitude_order: Flag,
}

impl AssumptionFlags {
    pub fn hard_pass(&self) -> bool {
        self.failures().is_empty()
    }

    /// All flags with their names, in audit order.
    pub fn named(&self) -> [(&'static str, Flag); 6] {
        [
            ("interior_unique_max", self.interior_unique_max),
            ("perturbed_maximizers", self.perturbed_maximizers),
            ("det_lower_bound", self.det_lower_bound),
            ("deriv_bounds_finite", self.deriv_bounds_finite),
            ("eigen_floor", self.eigen_floor),
            ("amplitude_order", self.amplitude_order),
        ]
    }

    /// Names of assumptions that failed hard (warnings excluded).
    pub fn failures(&self) -> Vec<&'static str> {
        self.named()
            .into_iter()
            .filter_map(|(name, flag)| (flag == Flag::Fail).then_some(name))
            .collect()
    }
}

/// Snapshot of the perturbed critical point at one `n`.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbedRecord {
    pub n: u64,
    pub c_n: Vec<f64>,
    pub grad_norm: f64,
    pub hessian: SymMatrix,
    /// Ascending eigenvalues of the perturbed Hessian at `c_n`.
    pub eigenvalues: Vec<f64>,
    pub det: f64,
}

/// Everything the asymptotic evaluator needs to know about a problem's
/// critical structure, plus the assumption audit.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    pub c: Vec<f64>,
    pub h_at_c: f64,
    pub grad_norm: f64,
    pub hessian: SymMatrix,
    /// Ascending eigenvalues of the unperturbed Hessian at `c`.
    pub eigenvalues: Vec<f64>,
    pub det: f64,
    pub records: Vec<PerturbedRecord>,
    /// Radius of the ball excluded around `c` for the tail gap.
    pub tail_delta: f64,
    /// `min h(c) - h(x)` over grid points outside the ball; positive when the
    /// maximum is attained near `c` only.
    pub tail_gap: f64,
    /// Minimum over `n` of the squared eigenvalue mass at `c_n`.
    pub eigen_floor: f64,
    /// Minimum of `|det D2(h + eps_n sigma)|` over the grid and all `n`.
    pub min_abs_det_grid: f64,
    /// Largest order-2/3 phase derivative magnitude seen on the grid.
    pub max_deriv_grid: f64,
    pub grid_per_axis: usize,
    pub flags: AssumptionFlags,
}

impl CriticalReport {
    pub fn record_for(&self, n: u64) -> Option<&PerturbedRecord> {
        self.records.iter().find(|r| r.n == n)
    }
}

/// Knobs for [`verify_assumptions`]; `margin` and `delta` default to 5% and
/// 25% of the smallest box half-width.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub grid_per_axis: usize,
    pub margin: Option<f64>,
    pub delta: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { grid_per_axis: DEFAULT_GRID_PER_AXIS, margin: None, delta: None }
    }
}

fn check_n_list(n_list: &[u64]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("n list must not be empty".into()));
    }
    for w in n_list.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidArgument("n list must be strictly ascending".into()));
        }
    }
    if n_list[0] == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    Ok(())
}

/// Audits the standing assumptions on the grid and at each requested `n`,
/// producing the critical report downstream consumers share. Structural
/// breakdowns (no interior maximum, Newton stall, indefinite Hessian) surface
/// as errors; everything else lands in the flags.
pub fn verify_assumptions(
    prob: &ProblemSpec,
    n_list: &[u64],
    opts: &VerifyOptions,
) -> Result<CriticalReport> {
    check_n_list(n_list)?;
    let dim = prob.dim();
    let margin = opts.margin.unwrap_or_else(|| prob.default_margin());
    let delta = opts.delta.unwrap_or_else(|| 0.25 * prob.min_half_width());
    if delta <= 0.0 {
        return Err(Error::InvalidArgument(format!("delta {delta} must be positive")));
    }
    let grid = effective_grid(dim, opts.grid_per_axis);

    let c = grid_then_newton(&prob.h, prob.bounds(), grid, margin)?;
    let h_at_c = prob.h.eval(&c)?;
    let grad_norm = l2(&prob.h.gradient(&c)?);
    let hessian = prob.h.hessian(&c)?;
    let eigen = hessian.jacobi_eigen()?;
    let det: f64 = eigen.eigenvalues.iter().product();

    let mut interior_unique_max = Flag::Pass;
    if det.abs() < DET_FLOOR {
        interior_unique_max = Flag::Fail;
    }
    if !hessian.is_negative_definite(ND_TOL)? {
        interior_unique_max = Flag::Fail;
    }

    // Tail gap: smallest drop of h outside the delta-ball around c. A
    // non-positive gap means the grid sees the maximum attained away from c.
    let mut tail_gap = f64::INFINITY;
    for_each_grid_point(prob.bounds(), grid, |x| {
        let dist = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if dist >= delta {
            tail_gap = tail_gap.min(h_at_c - prob.h.eval(x)?);
        }
        Ok(())
    })?;
    if tail_gap <= 0.0 {
        interior_unique_max = Flag::Fail;
    }

    let mut records = Vec::with_capacity(n_list.len());
    let mut warm = c.clone();
    for &n in n_list {
        let c_n = track_c_n(prob, n, &warm)?;
        let phase = prob.phase(n);
        let rec_grad = l2(&phase.gradient(&c_n)?);
        let rec_hess = phase.hessian(&c_n)?;
        let rec_eigen = rec_hess.jacobi_eigen()?.eigenvalues;
        let rec_det: f64 = rec_eigen.iter().product();
        warm = c_n.clone();
        records.push(PerturbedRecord {
            n,
            c_n,
            grad_norm: rec_grad,
            hessian: rec_hess,
            eigenvalues: rec_eigen,
            det: rec_det,
        });
    }

    // Grid scans for the determinant lower bound and derivative upper bound,
    // shared across all requested n.
    let order2: Vec<MultiIndex> = enumerate_multi_indices(dim, 2, false);
    let order3: Vec<MultiIndex> = enumerate_multi_indices(dim, 3, false);
    let mut min_abs_det_grid = f64::INFINITY;
    let mut max_deriv_grid: f64 = 0.0;
    let mut all_finite = true;
    for &n in n_list {
        let phase = prob.phase(n);
        for_each_grid_point(prob.bounds(), grid, |x| {
            let hess = phase.hessian(x)?;
            min_abs_det_grid = min_abs_det_grid.min(det_cofactor(&hess).abs());
            for alpha in order2.iter().chain(order3.iter()) {
                let v = phase.eval_partial(alpha, x)?;
                if v.is_finite() {
                    max_deriv_grid = max_deriv_grid.max(v.abs());
                } else {
                    all_finite = false;
                }
            }
            Ok(())
        })?;
    }
    let det_lower_bound = if min_abs_det_grid >= DET_FLOOR { Flag::Pass } else { Flag::Warn };
    let deriv_bounds_finite = if all_finite { Flag::Pass } else { Flag::Fail };

    let eigen_floor = records
        .iter()
        .map(|r| r.eigenvalues.iter().map(|l| l * l).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let eigen_floor_flag = if eigen_floor > 1e-12 { Flag::Pass } else { Flag::Fail };

    let amplitude_order = amplitude_flag(prob, &c)?;

    let flags = AssumptionFlags {
        interior_unique_max,
        perturbed_maximizers: Flag::Pass,
        det_lower_bound,
        deriv_bounds_finite,
        eigen_floor: eigen_floor_flag,
        amplitude_order,
    };

    Ok(CriticalReport {
        c,
        h_at_c,
        grad_norm,
        hessian,
        eigenvalues: eigen.eigenvalues,
        det,
        records,
        tail_delta: delta,
        tail_gap,
        eigen_floor,
        min_abs_det_grid,
        max_deriv_grid,
        grid_per_axis: grid,
        flags,
    })
}

/// Amplitude vanishing pattern at `c`: all derivatives of order below `k`
/// must vanish (within `ZERO_TOL`) and some all-even order-`k` derivative
/// must survive. For `k = 0` this is just `g(c) != 0`.
fn amplitude_flag(prob: &ProblemSpec, c: &[f64]) -> Result<Flag> {
    let dim = prob.dim();
    let k = prob.k();
    for t in 0..k {
        for alpha in enumerate_multi_indices(dim, t, false) {
            if prob.g.eval_partial(&alpha, c)?.abs() > ZERO_TOL {
                return Ok(Flag::Fail);
            }
        }
    }
    let survives = enumerate_multi_indices(dim, k, true)
        .iter()
        .map(|beta| prob.g.eval_partial(beta, c).map(|v| v.abs() > ZERO_TOL))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .any(|b| b);
    Ok(if survives { Flag::Pass } else { Flag::Fail })
}

/// A measured drift sequence: either identically zero to working precision
/// or a fitted power law.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DriftFit {
    Exact,
    Fitted(RateFit),
}

impl DriftFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            DriftFit::Exact => None,
            DriftFit::Fitted(fit) => Some(fit.slope),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftRow {
    pub n: u64,
    pub cn_dist: f64,
    pub det_drift: f64,
    pub eigen_drift: Vec<f64>,
}

/// Drift of the maximizer, Hessian determinant, and each sorted eigenvalue
/// as `n` grows, with fitted decay rates.
#[derive(Debug, Clone, Serialize)]
pub struct DriftRates {
    pub c: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub det: f64,
    pub cn: DriftFit,
    pub det_drift: DriftFit,
    pub eigen_drift: Vec<DriftFit>,
    pub rows: Vec<DriftRow>,
}

/// Measures `|c_n - c|`, `|det D2 h_n(c_n) - det D2 h(c)|`, and the sorted
/// eigenvalue drifts over `n_list`, fitting each against a power law. Needs a
/// genuinely perturbed problem and at least 4 points spanning two decades.
pub fn drift_rates(prob: &ProblemSpec, n_list: &[u64]) -> Result<DriftRates> {
    check_n_list(n_list)?;
    if prob.s() == 0.0 {
        return Err(Error::InvalidArgument(
            "drift rates need a perturbed problem (s > 0)".into(),
        ));
    }
    if n_list.len() < 4 {
        return Err(Error::InvalidArgument("drift rates need at least 4 values of n".into()));
    }
    if (n_list[n_list.len() - 1] as f64) < 100.0 * n_list[0] as f64 {
        return Err(Error::InvalidArgument("n list must span at least two decades".into()));
    }

    let dim = prob.dim();
    let c = grid_then_newton(
        &prob.h,
        prob.bounds(),
        DEFAULT_GRID_PER_AXIS,
        prob.default_margin(),
    )?;
    let eigen = prob.h.hessian(&c)?.jacobi_eigen()?.eigenvalues;
    let det: f64 = eigen.iter().product();

    let mut rows = Vec::with_capacity(n_list.len());
    let mut warm = c.clone();
    for &n in n_list {
        let c_n = track_c_n(prob, n, &warm)?;
        let phase = prob.phase(n);
        let eigen_n = phase.hessian(&c_n)?.jacobi_eigen()?.eigenvalues;
        let det_n: f64 = eigen_n.iter().product();
        let cn_dist = c_n.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let eigen_drift: Vec<f64> =
            eigen_n.iter().zip(&eigen).map(|(a, b)| (a - b).abs()).collect();
        rows.push(DriftRow { n, cn_dist, det_drift: (det_n - det).abs(), eigen_drift });
        warm = c_n;
    }

    let fit_sequence = |values: Vec<(u64, f64)>| -> Result<DriftFit> {
        if values.iter().all(|&(_, v)| v < EXACT_DRIFT_FLOOR) {
            return Ok(DriftFit::Exact);
        }
        Ok(DriftFit::Fitted(fit_rate(&values, 0, EXACT_DRIFT_FLOOR)?))
    };

    let cn = fit_sequence(rows.iter().map(|r| (r.n, r.cn_dist)).collect())?;
    let det_drift = fit_sequence(rows.iter().map(|r| (r.n, r.det_drift)).collect())?;
    let eigen_drift = (0..dim)
        .map(|i| fit_sequence(rows.iter().map(|r| (r.n, r.eigen_drift[i])).collect()))
        .collect::<Result<Vec<_>>>()?;

    Ok(DriftRates { c, eigenvalues: eigen, det, cn, det_drift, eigen_drift, rows })
}
