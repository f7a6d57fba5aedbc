//! Independent quadrature reference for the integrals the expansion
//! approximates. Gauss-Legendre panels are refined geometrically toward the
//! maximizer so the `O(1/sqrt(n))` peak width is always resolved, and whole
//! rounds are repeated with one extra refinement level until two successive
//! values agree to `rel_tol`.
//!
//! Everything is computed relative to the phase value at the peak, so the
//! returned mantissa is `exp(-n h_n(center)) * I_n` and never overflows.

use serde::Serialize;

use crate::critpoint::ProblemSpec;
use crate::error::{Error, Result};

/// Hard cap on refinement rounds; hitting it returns the last value flagged
/// as non-converged rather than looping forever.
const MAX_ROUNDS: usize = 24;

/// Newton iterations allowed per Legendre root.
const LEGENDRE_NEWTON_MAX: usize = 100;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes per panel and axis.
    pub base_order: usize,
    /// Minimum number of geometric refinement levels per side of the peak.
    pub refinement_levels: usize,
    /// Stop once two successive rounds agree to this relative tolerance.
    pub rel_tol: f64,
    /// Abort (or return the best value so far) past this many node
    /// evaluations.
    pub max_total_nodes: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            base_order: 32,
            refinement_levels: 6,
            rel_tol: 1e-10,
            max_total_nodes: 10_000_000,
        }
    }
}

/// Quadrature result in split form: `I_n = exp(log_scale) * mantissa`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReferenceValue {
    pub log_scale: f64,
    pub mantissa: f64,
    /// Relative difference between the last two rounds; the resolution floor
    /// for downstream residuals.
    pub est_error: f64,
    pub converged: bool,
    pub nodes_used: u64,
    pub levels_used: usize,
}

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `(a, b)`,
/// exact for polynomials of degree `2 * order - 1`. Roots come from Newton
/// iteration seeded with the Chebyshev-angle estimates; the rule is
/// symmetrized so mirrored nodes are bitwise negatives.
pub fn gauss_legendre_rule(order: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    if order == 0 {
        return Err(Error::InvalidArgument("quadrature order must be positive".into()));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidArgument(format!("bad quadrature interval ({a}, {b})")));
    }
    let mut nodes = vec![(0.0f64, 0.0f64); order];
    let m = order as f64;
    for i in 0..order.div_ceil(2) {
        let (x, w) = if 2 * i + 1 == order {
            // Central node of an odd rule sits exactly at zero.
            let (_, dp) = legendre_with_deriv(order, 0.0);
            (0.0, 2.0 / (dp * dp))
        } else {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m + 0.5)).cos();
            let mut converged = false;
            for _ in 0..LEGENDRE_NEWTON_MAX {
                let (p, dp) = legendre_with_deriv(order, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::OracleNotConverged(format!(
                    "Legendre root {i} of order {order} did not converge"
                )));
            }
            let (_, dp) = legendre_with_deriv(order, x);
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        };
        // The seed above is in (0, 1]; mirror to fill the negative half.
        nodes[order - 1 - i] = (x, w);
        nodes[i] = (-x, w);
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Ok(nodes.into_iter().map(|(x, w)| (mid + half * x, half * w)).collect())
}

/// `(P_m(x), P'_m(x))` by the three-term recurrence; the derivative uses
/// `P'_m = m (x P_m - P_{m-1}) / (x^2 - 1)`, fine away from the endpoints.
fn legendre_with_deriv(order: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if order == 1 {
        return (x, 1.0);
    }
    for k in 1..order {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let m = order as f64;
    (p, m * (x * p - p_prev) / (x * x - 1.0))
}

/// Deterministic pairwise summation: error growth `O(log n)` rather than
/// `O(n)` ulps.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Breakpoints of the geometric panel subdivision of one axis: panel edges
/// halve in distance to `center` until the innermost panel is no wider than
/// `10 / sqrt(n)` (and at least `min_levels` halvings happen on each side).
fn axis_breakpoints(a: f64, b: f64, center: f64, n: u64, min_levels: usize, extra: usize) -> Vec<f64> {
    let levels_for = |width: f64| -> usize {
        let target = 10.0 / (n as f64).sqrt();
        let needed = if width <= target { 0 } else { (width / target).log2().ceil() as usize };
        needed.max(min_levels) + extra
    };
    let mut cuts = Vec::new();
    let left = center - a;
    let right = b - center;
    cuts.push(a);
    if left > 0.0 {
        let levels = levels_for(left);
        for j in 1..=levels {
            cuts.push(center - left * 0.5f64.powi(j as i32));
        }
    }
    cuts.push(center);
    if right > 0.0 {
        let levels = levels_for(right);
        for j in (1..=levels).rev() {
            cuts.push(center + right * 0.5f64.powi(j as i32));
        }
    }
    cuts.push(b);
    cuts.dedup_by(|x, y| x == y);
    cuts
}

/// Integrates `exp(n h_n) g` over the problem box with the phase value at
/// `center` factored out. `center` should be the (perturbed) maximizer; any
/// interior point works, just with a worse-conditioned mantissa.
pub fn reference_integral(
    prob: &ProblemSpec,
    n: u64,
    center: &[f64],
    cfg: &QuadratureConfig,
) -> Result<ReferenceValue> {
    let d = prob.dim();
    if center.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: center.len() });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample size n must be positive".into()));
    }
    if cfg.base_order < 2 || cfg.rel_tol <= 0.0 || cfg.refinement_levels == 0 {
        return Err(Error::InvalidArgument(format!("bad quadrature config {cfg:?}")));
    }
    for (i, &(a, b)) in prob.bounds().iter().enumerate() {
        if !(center[i] > a && center[i] < b) {
            return Err(Error::InvalidArgument(format!(
                "center coordinate {i} = {} outside ({a}, {b})",
                center[i]
            )));
        }
    }

    let phase = prob.phase(n);
    let phase_at_center = phase.eval(center)?;
    let log_scale = n as f64 * phase_at_center;
    let rule = gauss_legendre_rule(cfg.base_order, -1.0, 1.0)?;

    let mut nodes_used = 0u64;
    let mut prev: Option<f64> = None;
    let mut best = 0.0f64;
    let mut est_error = f64::INFINITY;
    let mut levels_used = 0;

    for round in 0..MAX_ROUNDS {
        // Panel edges per axis, one extra halving per round.
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let (a, b) = prob.bounds()[i];
                axis_breakpoints(a, b, center[i], n, cfg.refinement_levels, round)
            })
            .collect();
        let panels_per_axis: Vec<usize> = axes.iter().map(|c| c.len() - 1).collect();
        let cells: u64 = panels_per_axis.iter().map(|&p| p as u64).product();
        let round_nodes = cells * (cfg.base_order as u64).pow(d as u32);
        if nodes_used + round_nodes > cfg.max_total_nodes {
            if let Some(v) = prev {
                return Ok(ReferenceValue {
                    log_scale,
                    mantissa: v,
                    est_error,
                    converged: false,
                    nodes_used,
                    levels_used,
                });
            }
            return Err(Error::NodeBudget { needed: round_nodes, budget: cfg.max_total_nodes });
        }

        // Per-axis mapped rules for every panel.
        let mut axis_rules: Vec<Vec<Vec<(f64, f64)>>> = Vec::with_capacity(d);
        for cuts in &axes {
            let mut panels = Vec::with_capacity(cuts.len() - 1);
            for w in cuts.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                let half = 0.5 * (w[1] - w[0]);
                panels.push(rule.iter().map(|&(x, wt)| (mid + half * x, half * wt)).collect());
            }
            axis_rules.push(panels);
        }

        // Tensor sum over every cell, accumulated per cell then pairwise.
        let mut cell_values = Vec::with_capacity(cells as usize);
        let mut panel_idx = vec![0usize; d];
        let mut x = vec![0.0f64; d];
        loop {
            let mut node_values = Vec::with_capacity(cfg.base_order.pow(d as u32));
            tensor_nodes(&axis_rules, &panel_idx, 0, 1.0, &mut x, &mut node_values, &|x| {
                // Dimensions were validated above, so eval cannot fail here.
                let hx = phase.eval(x).expect("dim checked");
                let gx = prob.g.eval(x).expect("dim checked");
                (n as f64 * (hx - phase_at_center)).exp() * gx
            });
            cell_values.push(pairwise_sum(&node_values));
            // Odometer over panel indices.
            let mut done = true;
            for axis in (0..d).rev() {
                panel_idx[axis] += 1;
                if panel_idx[axis] < panels_per_axis[axis] {
                    done = false;
                    break;
                }
                panel_idx[axis] = 0;
            }
            if done {
                break;
            }
        }
        nodes_used += round_nodes;
        levels_used = cfg.refinement_levels + round;
        let value = pairwise_sum(&cell_values);

        if let Some(p) = prev {
            let denom = value.abs().max(f64::MIN_POSITIVE);
            est_error = (value - p).abs() / denom;
            best = value;
            if est_error < cfg.rel_tol {
                return Ok(ReferenceValue {
                    log_scale,
                    mantissa: value,
                    est_error,
                    converged: true,
                    nodes_used,
                    levels_used,
                });
            }
        } else {
            best = value;
        }
        prev = Some(value);
    }

    Ok(ReferenceValue {
        log_scale,
        mantissa: best,
        est_error,
        converged: false,
        nodes_used,
        levels_used,
    })
}

/// Recursive tensor-product walk over one cell: multiplies axis weights and
/// fills `x` coordinate by coordinate, pushing `w * f(x)` at the leaves.
fn tensor_nodes(
    axis_rules: &[Vec<Vec<(f64, f64)>>],
    panel_idx: &[usize],
    axis: usize,
    weight: f64,
    x: &mut [f64],
    out: &mut Vec<f64>,
    f: &dyn Fn(&[f64]) -> f64,
) {
    if axis == axis_rules.len() {
        out.push(weight * f(x));
        return;
    }
    for &(xi, wi) in &axis_rules[axis][panel_idx[axis]] {
        x[axis] = xi;
        tensor_nodes(axis_rules, panel_idx, axis + 1, weight * wi, x, out, f);
    }
}
