//! Experiment harness: fits empirical decay rates of residuals against the
//! predicted exponent and classifies the outcome. The residual at sample
//! size `n` is `|oracle - leading approximation|`, both rescaled to the
//! common factor `exp(n h(c))` so the comparison never over- or underflows.

use std::fmt;

use serde::Serialize;

use crate::asymptotics::{approx_integral, exponent_q, ApproxVariant};
use crate::critpoint::{
    drift_rates, verify_assumptions, CriticalReport, DriftFit, DriftRow, ProblemSpec,
    VerifyOptions,
};
use crate::error::{Error, Result};
use crate::fields::{Builtin, MultiIndex, ScalarField};
use crate::oracle::{reference_integral, QuadratureConfig};

/// Slope-vs-target tolerance for verdict classification.
pub const VERDICT_TOL: f64 = 0.15;

/// Sample sizes below this are treated as pre-asymptotic and excluded from
/// rate fits (they stay in the row table).
pub const BURN_IN_MIN_N: u64 = 64;

/// Residuals below this are indistinguishable from rounding noise.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

/// Least-squares power-law fit `value ~ C * n^slope` in log-log coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Sample sizes that actually entered the fit.
    pub n_used: Vec<u64>,
    /// Points excluded (burn-in or below the floor).
    pub dropped: usize,
}

/// Fits `log(value) = intercept + slope * log(n)`, skipping the first
/// `burn_in` points and dropping values below `floor` (they count as
/// `dropped`). Errors on nonpositive values and on fewer than three usable
/// points.
pub fn fit_rate(points: &[(u64, f64)], burn_in: usize, floor: f64) -> Result<RateFit> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidArgument(format!("fit floor must be positive, got {floor}")));
    }
    if burn_in >= points.len() {
        return Err(Error::TooFewPoints { usable: 0 });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut n_used = Vec::new();
    let mut dropped = burn_in;
    for &(n, v) in &points[burn_in..] {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size n = 0 in rate fit".into()));
        }
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::NonPositiveValue { value: v });
        }
        if v < floor {
            dropped += 1;
            continue;
        }
        xs.push((n as f64).ln());
        ys.push(v.ln());
        n_used.push(n);
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints { usable: xs.len() });
    }
    let m = xs.len() as f64;
    let mean_x: f64 = xs.iter().sum::<f64>() / m;
    let mean_y: f64 = ys.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all sample sizes coincide in rate fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let pred = intercept + slope * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot < 1e-30 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    Ok(RateFit { slope, intercept, r_squared, n_used, dropped })
}

/// How an observed decay compares with a predicted `O(n^{-target})` bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Observed slope matches `-target` within `VERDICT_TOL`.
    Saturated,
    /// Decays at least as fast as predicted, and strictly faster than the
    /// saturation window.
    BoundRespected,
    /// Decays slower than predicted.
    Violated,
    /// Residuals sit below the noise floor at (almost) every sample size, so
    /// no rate is measurable.
    Exact,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Saturated => "saturated",
            Verdict::BoundRespected => "bound-respected",
            Verdict::Violated => "violated",
            Verdict::Exact => "exact",
        })
    }
}

/// Classifies a fitted slope against a predicted decay exponent
/// (`target > 0` means the bound is `O(n^{-target})`).
pub fn classify_slope(slope: f64, target: f64) -> Verdict {
    if (slope + target).abs() <= VERDICT_TOL {
        Verdict::Saturated
    } else if slope <= -target + VERDICT_TOL {
        Verdict::BoundRespected
    } else {
        Verdict::Violated
    }
}

/// One sample size of a theorem experiment. All mantissas share the common
/// scale `exp(log_scale)` with `log_scale = n h(c)`.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremRow {
    pub n: u64,
    pub log_scale: f64,
    pub oracle_mantissa: f64,
    pub approx_mantissa: f64,
    /// Leading approximation built from the perturbed spectrum at this `n`.
    pub perturbed_mantissa: f64,
    pub residual: f64,
    /// Oracle resolution on the common scale; residuals within ten times
    /// this are treated as unmeasurable.
    pub oracle_abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremExperiment {
    pub rows: Vec<TheoremRow>,
    pub predicted_q: f64,
    /// Absent when too few residuals rise above the noise floor.
    pub fit: Option<RateFit>,
    pub verdict: Verdict,
    pub report: CriticalReport,
}

/// Runs the full residual-decay experiment: verifies the standing
/// assumptions, computes oracle and leading approximation at every `n`, and
/// fits the decay of their difference against the predicted exponent.
///
/// Requires at least six sample sizes spanning two decades, a convergent
/// oracle at every one of them, and a hard pass of the assumption checks.
pub fn run_theorem_experiment(
    prob: &ProblemSpec,
    n_list: &[u64],
    cfg: &QuadratureConfig,
) -> Result<TheoremExperiment> {
    if n_list.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "need at least 6 sample sizes for a rate fit, got {}",
            n_list.len()
        )));
    }
    let (lo, hi) = (n_list[0], *n_list.last().expect("nonempty"));
    if (hi as f64) < 100.0 * lo as f64 {
        return Err(Error::InvalidArgument(format!(
            "sample sizes must span two decades, got {lo}..{hi}"
        )));
    }
    let report = verify_assumptions(prob, n_list, &VerifyOptions::default())?;
    if !report.flags.hard_pass() {
        return Err(Error::Assumption {
            tag: "standing-assumptions",
            detail: report.flags.failures().join("; "),
        });
    }
    let predicted_q = exponent_q(prob.p(), prob.dim(), prob.k())?;

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let rec = report.record_for(n).expect("verify_assumptions records every n");
        let oracle = reference_integral(prob, n, &rec.c_n, cfg)?;
        if !oracle.converged {
            return Err(Error::OracleNotConverged(format!(
                "reference integral at n = {n} stalled at relative error {:.3e}",
                oracle.est_error
            )));
        }
        let limit = approx_integral(prob, &report, n, ApproxVariant::Limit)?;
        let perturbed = approx_integral(prob, &report, n, ApproxVariant::Perturbed)?;
        let oracle_mantissa = oracle.mantissa * (oracle.log_scale - limit.log_scale).exp();
        let perturbed_mantissa = perturbed.mantissa * (perturbed.log_scale - limit.log_scale).exp();
        rows.push(TheoremRow {
            n,
            log_scale: limit.log_scale,
            oracle_mantissa,
            approx_mantissa: limit.mantissa,
            perturbed_mantissa,
            residual: (oracle_mantissa - limit.mantissa).abs(),
            oracle_abs_error: oracle.est_error * oracle_mantissa.abs(),
        });
    }

    // Fit whatever rises above burn-in and the per-point noise floor.
    let mut points = Vec::new();
    let mut dropped = 0usize;
    for row in &rows {
        let noise = RESIDUAL_FLOOR.max(10.0 * row.oracle_abs_error);
        if row.n < BURN_IN_MIN_N || row.residual < noise {
            dropped += 1;
            continue;
        }
        points.push((row.n, row.residual));
    }
    let (fit, verdict) = if points.len() < 3 {
        (None, Verdict::Exact)
    } else {
        let mut fit = fit_rate(&points, 0, RESIDUAL_FLOOR)?;
        fit.dropped = dropped;
        let verdict = classify_slope(fit.slope, predicted_q);
        (Some(fit), verdict)
    };
    Ok(TheoremExperiment { rows, predicted_q, fit, verdict, report })
}

/// Drift fit together with its verdict against the `O(n^{-p})` bound.
#[derive(Debug, Clone, Serialize)]
pub struct DriftOutcome {
    pub fit: DriftFit,
    pub verdict: Verdict,
}

fn drift_outcome(fit: DriftFit, p: f64) -> DriftOutcome {
    let verdict = match &fit {
        DriftFit::Exact => Verdict::Exact,
        DriftFit::Fitted(rate) => classify_slope(rate.slope, p),
    };
    DriftOutcome { fit, verdict }
}

/// Perturbation-lemma experiment: measured drift rates of the maximizer, the
/// Hessian determinant, and each eigenvalue, classified against `n^{-p}`.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaSuite {
    pub p: f64,
    pub maximizer: DriftOutcome,
    pub determinant: DriftOutcome,
    pub eigenvalues: Vec<DriftOutcome>,
    pub rows: Vec<DriftRow>,
    pub report: CriticalReport,
}

pub fn run_lemma_suite(prob: &ProblemSpec, n_list: &[u64]) -> Result<LemmaSuite> {
    let rates = drift_rates(prob, n_list)?;
    let report = verify_assumptions(prob, n_list, &VerifyOptions::default())?;
    let p = prob.p();
    Ok(LemmaSuite {
        p,
        maximizer: drift_outcome(rates.cn, p),
        determinant: drift_outcome(rates.det_drift, p),
        eigenvalues: rates.eigen_drift.into_iter().map(|f| drift_outcome(f, p)).collect(),
        rows: rates.rows,
        report,
    })
}

/// A named ready-made problem for the built-in suite.
pub struct SuiteProblem {
    pub name: &'static str,
    pub description: &'static str,
    pub problem: ProblemSpec,
}

/// Default sample sizes: powers of two from 2^6 to 2^16.
pub fn default_n_list() -> Vec<u64> {
    (6..=16).map(|e| 1u64 << e).collect()
}

/// Eight stock problems covering the interesting corners: unperturbed
/// Gaussian phases (exact leading term), amplitudes vanishing to order `k`,
/// a plane problem with distinct curvatures, and perturbations at decay
/// exponents on both sides of the `p = 3/2` branch point.
pub fn builtin_suite() -> Vec<SuiteProblem> {
    let square = |dim: usize| (0..dim).map(|_| (-1.0, 1.0)).collect::<Vec<_>>();
    let mono = |entries: &[u32], c: f64| ScalarField::monomial(MultiIndex::new(entries.to_vec()), c).unwrap();
    let one = |dim: usize| ScalarField::builtin(dim, Builtin::One).unwrap();
    let zero = |dim: usize| ScalarField::builtin(dim, Builtin::Zero).unwrap();
    let plane_phase = |cx: f64, cy: f64| {
        ScalarField::polynomial(
            2,
            vec![(MultiIndex::new(vec![2, 0]), cx), (MultiIndex::new(vec![0, 2]), cy)],
        )
        .unwrap()
    };
    let perturbed = |p: f64| {
        ProblemSpec::new(square(1), mono(&[2], -0.5), one(1), one(1), p, 1.0, 0).unwrap()
    };
    vec![
        SuiteProblem {
            name: "classical-gauss",
            description: "pure Gaussian phase, flat amplitude; leading term is exact",
            problem: ProblemSpec::new(
                square(1),
                mono(&[2], -1.0),
                zero(1),
                one(1),
                f64::INFINITY,
                0.0,
                0,
            )
            .unwrap(),
        },
        SuiteProblem {
            name: "flat-amplitude-k2",
            description: "amplitude x^2 vanishing to second order at the maximizer",
            problem: ProblemSpec::new(
                square(1),
                mono(&[2], -0.5),
                zero(1),
                mono(&[2], 1.0),
                f64::INFINITY,
                0.0,
                2,
            )
            .unwrap(),
        },
        SuiteProblem {
            name: "flat-amplitude-k4",
            description: "amplitude x^4 vanishing to fourth order at the maximizer",
            problem: ProblemSpec::new(
                square(1),
                mono(&[2], -0.5),
                zero(1),
                mono(&[4], 1.0),
                f64::INFINITY,
                0.0,
                4,
            )
            .unwrap(),
        },
        SuiteProblem {
            name: "plane-diagonal",
            description: "two dimensions with distinct curvatures, unperturbed",
            problem: ProblemSpec::new(
                square(2),
                plane_phase(-0.5, -1.0),
                zero(2),
                one(2),
                f64::INFINITY,
                0.0,
                0,
            )
            .unwrap(),
        },
        SuiteProblem {
            name: "plane-isotropic-p15",
            description: "isotropic plane phase with constant perturbation at the branch point p = 3/2",
            problem: ProblemSpec::new(
                square(2),
                plane_phase(-0.5, -0.5),
                one(2),
                one(2),
                1.5,
                1.0,
                0,
            )
            .unwrap(),
        },
        SuiteProblem {
            name: "perturbed-p11",
            description: "constant perturbation decaying at p = 1.1, inside the slow branch",
            problem: perturbed(1.1),
        },
        SuiteProblem {
            name: "perturbed-p125",
            description: "constant perturbation decaying at p = 1.25, inside the slow branch",
            problem: perturbed(1.25),
        },
        SuiteProblem {
            name: "perturbed-p2",
            description: "constant perturbation decaying at p = 2, beyond the branch point",
            problem: perturbed(2.0),
        },
    ]
}

/// Per-problem outcome of the built-in suite; `pass` means the bound held
/// (any verdict but `violated`).
#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub predicted_q: f64,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub verdict: Verdict,
    pub pass: bool,
}

/// Runs every built-in problem over the default sample sizes.
pub fn run_suite(cfg: &QuadratureConfig) -> Result<Vec<SuiteOutcome>> {
    let n_list = default_n_list();
    builtin_suite()
        .into_iter()
        .map(|sp| {
            let exp = run_theorem_experiment(&sp.problem, &n_list, cfg)?;
            Ok(SuiteOutcome {
                name: sp.name,
                predicted_q: exp.predicted_q,
                slope: exp.fit.as_ref().map(|f| f.slope),
                r_squared: exp.fit.as_ref().map(|f| f.r_squared),
                verdict: exp.verdict,
                pass: exp.verdict != Verdict::Violated,
            })
        })
        .collect()
}
