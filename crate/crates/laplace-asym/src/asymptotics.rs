//! The asymptotic expansion itself: Gaussian moment formulas, the predicted
//! error exponent, and the leading-order evaluator for integrals
//! `int exp(n (h + eps_n sigma)) g dx` around an interior maximum.
//!
//! Values that would overflow `exp` are kept in split form
//! (`log_scale`, `mantissa`), with `value = exp(log_scale) * mantissa`.

use serde::Serialize;

use crate::critpoint::{track_c_n, CriticalReport, ProblemSpec};
use crate::error::{Error, Result};
use crate::fields::{enumerate_multi_indices, MultiIndex};
use crate::symmat::SymMatrix;

/// Largest moment order the pairing enumeration accepts; `|beta| = 10`
/// already means 945 pairings.
pub const MAX_WICK_ORDER: u32 = 10;

/// `m!!` for even nonnegative `m`, with `0!! = 1`.
pub fn double_factorial(m: i64) -> Result<u64> {
    if m < 0 {
        return Err(Error::InvalidArgument(format!("double factorial of negative {m}")));
    }
    if m % 2 != 0 {
        return Err(Error::InvalidArgument(format!("double factorial of odd {m}")));
    }
    let mut acc = 1u64;
    let mut v = m as u64;
    while v >= 2 {
        acc *= v;
        v -= 2;
    }
    Ok(acc)
}

/// `Gamma((m + 1) / 2)` for integer `m >= 0`, by exact recurrence from
/// `Gamma(1/2) = sqrt(pi)` and `Gamma(1) = 1`.
pub fn half_integer_gamma(m: i64) -> Result<f64> {
    if m < 0 {
        return Err(Error::InvalidArgument(format!("gamma argument needs m >= 0, got {m}")));
    }
    let mut acc = if m % 2 == 0 { std::f64::consts::PI.sqrt() } else { 1.0 };
    let mut v = m;
    while v >= 2 {
        acc *= (v - 1) as f64 / 2.0;
        v -= 2;
    }
    Ok(acc)
}

/// Moment of `y^beta` against `exp(1/2 sum lambda_i y_i^2)` over all of
/// R^d for strictly negative `lambda`: zero for any odd entry, otherwise
/// `prod (|lambda_i| / 2)^{-(beta_i + 1)/2} Gamma((beta_i + 1)/2)`.
pub fn gaussian_moment_diag(lambdas: &[f64], beta: &MultiIndex) -> Result<f64> {
    if lambdas.len() != beta.dim() {
        return Err(Error::DimensionMismatch { expected: lambdas.len(), got: beta.dim() });
    }
    if let Some(bad) = lambdas.iter().find(|l| !(l.is_finite() && **l < 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "diagonal moment needs strictly negative eigenvalues, got {bad}"
        )));
    }
    if !beta.is_even() {
        return Ok(0.0);
    }
    let mut acc = 1.0;
    for (i, &l) in lambdas.iter().enumerate() {
        let b = beta.get(i) as i64;
        acc *= (l.abs() / 2.0).powf(-((b + 1) as f64) / 2.0) * half_integer_gamma(b)?;
    }
    Ok(acc)
}

/// Same moment for a full negative definite matrix `A`, via the pairing
/// (Isserlis) expansion: `(2 pi)^{d/2} / sqrt(det(-A))` times the sum over
/// perfect pairings of the label multiset of products of covariances
/// `Sigma = (-A)^{-1}`. Independent of the eigenvalue-product formula, which
/// makes it the cross-check oracle for the diagonal route.
pub fn gaussian_moment_wick(a: &SymMatrix, beta: &MultiIndex) -> Result<f64> {
    let d = a.dim();
    if beta.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: beta.dim() });
    }
    let order = beta.order();
    if order > MAX_WICK_ORDER {
        return Err(Error::InvalidArgument(format!(
            "moment order {order} exceeds pairing cap {MAX_WICK_ORDER}"
        )));
    }
    let eigen = a.jacobi_eigen()?;
    if *eigen.eigenvalues.last().expect("dim >= 1") >= 0.0 {
        return Err(Error::NotNegativeDefinite);
    }
    if !order.is_multiple_of(2) {
        return Ok(0.0);
    }
    let det_neg_a: f64 = eigen.eigenvalues.iter().map(|l| -l).product();
    let norm = (2.0 * std::f64::consts::PI).powf(d as f64 / 2.0) / det_neg_a.sqrt();
    if order == 0 {
        return Ok(norm);
    }
    // Sigma = (-A)^{-1} = adj(-A) / det(-A).
    let minus_a = a.scale(-1.0);
    let sigma = minus_a.adjugate().scale(1.0 / det_neg_a);
    let mut labels = Vec::with_capacity(order as usize);
    for i in 0..d {
        for _ in 0..beta.get(i) {
            labels.push(i);
        }
    }
    Ok(norm * pairing_sum(&labels, &sigma))
}

/// Sum over perfect pairings of `prod Sigma[a][b]`. The first label pairs
/// with each remaining one; recursion handles the rest.
fn pairing_sum(labels: &[usize], sigma: &SymMatrix) -> f64 {
    if labels.is_empty() {
        return 1.0;
    }
    let first = labels[0];
    let mut total = 0.0;
    for j in 1..labels.len() {
        let mut rest = Vec::with_capacity(labels.len() - 2);
        rest.extend_from_slice(&labels[1..j]);
        rest.extend_from_slice(&labels[j + 1..]);
        total += sigma.get(first, labels[j]) * pairing_sum(&rest, sigma);
    }
    total
}

/// Predicted error exponent: the expansion residual is `O(n^{-q})` with
/// `q = d/2 + k/2 + min(p - 1, 1/2)`. Decay exponents `p <= 1` carry no
/// guarantee and are rejected; `p = +inf` encodes an unperturbed phase.
pub fn exponent_q(p: f64, dim: usize, k: u32) -> Result<f64> {
    if p.is_nan() || p <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "error exponent needs decay p > 1, got {p}"
        )));
    }
    let base = dim as f64 / 2.0 + k as f64 / 2.0;
    Ok(if p < 1.5 { base + (p - 1.0) } else { base + 0.5 })
}

/// Leading coefficient of the expansion, with a degeneracy marker for
/// amplitudes whose order-`k` derivatives cancel in the even-index sum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LeadingCoefficient {
    pub value: f64,
    pub degenerate: bool,
}

/// `K = sqrt((2 pi)^d / |det|) * sum over all-even |beta| = k of
/// `d^beta g(c) * prod |lambda_i|^{-beta_i/2} / beta_i!!`, evaluated from a
/// spectrum (`det` is the eigenvalue product). Amplitude derivatives are
/// always taken at the unperturbed maximizer `c`; the perturbed variant of
/// the expansion swaps in the perturbed spectrum only.
pub fn coefficient_from_spectrum(
    prob: &ProblemSpec,
    c: &[f64],
    lambdas: &[f64],
) -> Result<LeadingCoefficient> {
    let d = prob.dim();
    if lambdas.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: lambdas.len() });
    }
    let det: f64 = lambdas.iter().product();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "leading coefficient needs a nonzero determinant, got {det}"
        )));
    }
    let root = ((2.0 * std::f64::consts::PI).powi(d as i32) / det.abs()).sqrt();
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for beta in enumerate_multi_indices(d, prob.k(), true) {
        let mut term = prob.g.eval_partial(&beta, c)?;
        for (i, &l) in lambdas.iter().enumerate() {
            let b = beta.get(i);
            term *= l.abs().powi(-((b / 2) as i32)) / double_factorial(b as i64)? as f64;
        }
        sum += term;
        abs_sum += term.abs();
    }
    let value = root * sum;
    let degenerate = value == 0.0 || value.abs() < 1e-12 * root * abs_sum;
    Ok(LeadingCoefficient { value, degenerate })
}

/// Convenience wrapper taking the report produced by `verify_assumptions`.
pub fn leading_coefficient(prob: &ProblemSpec, report: &CriticalReport) -> Result<LeadingCoefficient> {
    coefficient_from_spectrum(prob, &report.c, &report.eigenvalues)
}

/// A value kept as `exp(log_scale) * mantissa` so that enormous phase factors
/// never overflow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScaledValue {
    pub log_scale: f64,
    pub mantissa: f64,
}

impl ScaledValue {
    /// Collapses the split form; may overflow for large scales, which is the
    /// caller's concern.
    pub fn collapse(&self) -> f64 {
        self.log_scale.exp() * self.mantissa
    }
}

/// Which spectrum feeds the leading coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproxVariant {
    /// Unperturbed maximizer and spectrum: `exp(n h(c))`, `D2 h(c)`.
    Limit,
    /// Perturbed maximizer and spectrum at the given `n`: `exp(n h_n(c_n))`,
    /// `D2 h_n(c_n)`; amplitude derivatives stay at `c`.
    Perturbed,
}

/// Leading-order approximation of the integral at sample size `n`:
/// `mantissa = n^{-d/2 - k/2} K`, `log_scale = n h(c)` (or the perturbed
/// counterparts). Falls back to tracking `c_n` on demand when the report does
/// not carry a record for `n`.
pub fn approx_integral(
    prob: &ProblemSpec,
    report: &CriticalReport,
    n: u64,
    variant: ApproxVariant,
) -> Result<ScaledValue> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size n must be positive".into()));
    }
    let amp = (n as f64).powf(-(prob.dim() as f64) / 2.0 - prob.k() as f64 / 2.0);
    match variant {
        ApproxVariant::Limit => {
            let coeff = coefficient_from_spectrum(prob, &report.c, &report.eigenvalues)?;
            Ok(ScaledValue { log_scale: n as f64 * report.h_at_c, mantissa: amp * coeff.value })
        }
        ApproxVariant::Perturbed => {
            let (c_n, eigenvalues) = match report.record_for(n) {
                Some(rec) => (rec.c_n.clone(), rec.eigenvalues.clone()),
                None => {
                    let c_n = track_c_n(prob, n, &report.c)?;
                    let eig = prob.phase(n).hessian(&c_n)?.jacobi_eigen()?.eigenvalues;
                    (c_n, eig)
                }
            };
            let coeff = coefficient_from_spectrum(prob, &report.c, &eigenvalues)?;
            let log_scale = n as f64 * prob.phase(n).eval(&c_n)?;
            Ok(ScaledValue { log_scale, mantissa: amp * coeff.value })
        }
    }
}
