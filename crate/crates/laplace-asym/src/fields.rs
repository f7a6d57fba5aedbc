//! Scalar fields on boxes with multi-index derivative oracles.
//!
//! Three field kinds share one evaluation interface:
//! * `polynomial` - term list with exact term-wise differentiation,
//! * `builtin` - named closed forms with analytic partials at every order,
//! * `numeric` - opaque closure with central finite differences and a
//!   declared maximum derivative order.
//!
//! Phases, perturbations, and amplitudes throughout the crate are all
//! expressed as [`ScalarField`] values, so every consumer sees the same
//! derivative semantics regardless of kind.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

/// Hard cap on ambient dimension. Everything downstream is dense in `d`.
pub const MAX_DIM: usize = 6;

/// Hard cap on the total degree of a polynomial term.
pub const MAX_DEGREE: u32 = 16;

/// Per-axis derivative orders the finite-difference stencils cover.
const MAX_FD_AXIS_ORDER: u32 = 4;

/// Exponent vector with the usual multi-index conventions: `order` is
/// `|alpha|`, `factorial` is the product of per-axis factorials.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    /// Length must be at least 1; this is a programming contract, not input
    /// validation, hence the assert.
    pub fn new(entries: Vec<u32>) -> Self {
        assert!(!entries.is_empty(), "multi-index needs dimension >= 1");
        MultiIndex { entries }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(vec![0; dim])
    }

    /// `e_axis`: a single first-order derivative along one axis.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut entries = vec![0; dim];
        entries[axis] = 1;
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn order(&self) -> u32 {
        self.entries.iter().sum()
    }

    /// Product of per-axis factorials, exact for the degree range the crate
    /// admits (each entry at most 16, so each factor is below 2^53).
    pub fn factorial(&self) -> f64 {
        self.entries
            .iter()
            .map(|&e| (1..=e as u64).map(|v| v as f64).product::<f64>())
            .product()
    }

    pub fn is_even(&self) -> bool {
        self.entries.iter().all(|e| e % 2 == 0)
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.entries[axis]
    }
}

/// Named closed-form fields with analytic partials at every order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// Constant 0.
    Zero,
    /// Constant 1.
    One,
    /// `exp(x_1 + ... + x_d)`; every partial equals the function itself.
    ExpSum,
    /// `cos(x_1 + ... + x_d)`; order-m partials rotate through the quadrant.
    CosSum,
    /// `exp(-|x|^2 / 2)`; partials via probabilists' Hermite polynomials.
    GaussBump,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Zero => "zero",
            Builtin::One => "one",
            Builtin::ExpSum => "exp_sum",
            Builtin::CosSum => "cos_sum",
            Builtin::GaussBump => "gauss_bump",
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name {
            "zero" => Some(Builtin::Zero),
            "one" => Some(Builtin::One),
            "exp_sum" => Some(Builtin::ExpSum),
            "cos_sum" => Some(Builtin::CosSum),
            "gauss_bump" => Some(Builtin::GaussBump),
            _ => None,
        }
    }

    fn partial(self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        match self {
            Builtin::Zero => 0.0,
            Builtin::One => {
                if alpha.order() == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Builtin::ExpSum => x.iter().sum::<f64>().exp(),
            Builtin::CosSum => {
                let s: f64 = x.iter().sum();
                match alpha.order() % 4 {
                    0 => s.cos(),
                    1 => -s.sin(),
                    2 => -s.cos(),
                    _ => s.sin(),
                }
            }
            Builtin::GaussBump => {
                let mut prod = 1.0;
                for (i, &xi) in x.iter().enumerate() {
                    let m = alpha.get(i);
                    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
                    prod *= sign * hermite_prob(m, xi) * (-xi * xi / 2.0).exp();
                }
                prod
            }
        }
    }
}

/// Probabilists' Hermite polynomial `He_m` via the three-term recurrence.
fn hermite_prob(m: u32, t: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = t;
    for k in 1..m {
        let next = t * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

type NumericFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Polynomial(Vec<(MultiIndex, f64)>),
    Builtin(Builtin),
    Numeric { f: NumericFn, max_order: usize },
}

/// A scalar field together with its derivative oracle.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    kind: Kind,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarField(dim={}, {})", self.dim, self.describe())
    }
}

impl ScalarField {
    /// Polynomial from a term list. Duplicated exponents are allowed and sum.
    pub fn polynomial(dim: usize, terms: Vec<(MultiIndex, f64)>) -> Result<Self> {
        check_dim(dim)?;
        for (alpha, coeff) in &terms {
            if alpha.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: alpha.dim() });
            }
            if alpha.order() > MAX_DEGREE {
                return Err(Error::InvalidField(format!(
                    "term degree {} exceeds cap {MAX_DEGREE}",
                    alpha.order()
                )));
            }
            if !coeff.is_finite() {
                return Err(Error::InvalidField(format!("non-finite coefficient {coeff}")));
            }
        }
        Ok(ScalarField { dim, kind: Kind::Polynomial(terms) })
    }

    /// Single-term polynomial `coeff * x^alpha`.
    pub fn monomial(alpha: MultiIndex, coeff: f64) -> Result<Self> {
        let dim = alpha.dim();
        Self::polynomial(dim, vec![(alpha, coeff)])
    }

    /// Constant polynomial.
    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::polynomial(dim, vec![(MultiIndex::zero(dim), value)])
    }

    pub fn builtin(dim: usize, which: Builtin) -> Result<Self> {
        check_dim(dim)?;
        Ok(ScalarField { dim, kind: Kind::Builtin(which) })
    }

    /// Opaque closure with finite-difference partials up to `max_order`
    /// total derivative order.
    pub fn numeric(
        dim: usize,
        max_order: usize,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        check_dim(dim)?;
        Ok(ScalarField { dim, kind: Kind::Numeric { f: Arc::new(f), max_order } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest total derivative order the field can answer.
    pub fn max_derivative_order(&self) -> usize {
        match &self.kind {
            Kind::Polynomial(_) | Kind::Builtin(_) => usize::MAX,
            Kind::Numeric { max_order, .. } => *max_order,
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            Kind::Polynomial(terms) => format!("polynomial[{} terms]", terms.len()),
            Kind::Builtin(b) => format!("builtin:{}", b.name()),
            Kind::Numeric { max_order, .. } => format!("numeric[max order {max_order}]"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_partial(&MultiIndex::zero(self.dim), x)
    }

    /// `d^alpha f(x)`. Polynomial and builtin kinds are analytic; the numeric
    /// kind falls back to central differences (see `fd_partial`).
    pub fn eval_partial(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: alpha.dim() });
        }
        check_point(self.dim, x)?;
        match &self.kind {
            Kind::Polynomial(terms) => Ok(poly_partial(terms, alpha, x)),
            Kind::Builtin(b) => Ok(b.partial(alpha, x)),
            Kind::Numeric { f, max_order } => {
                let order = alpha.order() as usize;
                if order > *max_order {
                    return Err(Error::DerivativeOrder { requested: order, max: *max_order });
                }
                fd_partial(f.as_ref(), alpha, x)
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..self.dim).map(|i| self.eval_partial(&MultiIndex::unit(self.dim, i), x)).collect()
    }

    /// Second-derivative matrix. The symmetrizing constructor makes the
    /// numeric kind's mixed partials exactly symmetric.
    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let d = self.dim;
        let mut rows = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in i..d {
                let mut entries = vec![0; d];
                entries[i] += 1;
                entries[j] += 1;
                let v = self.eval_partial(&MultiIndex::new(entries), x)?;
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        SymMatrix::from_rows(&rows)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::InvalidField(format!("dimension {dim} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

fn check_point(dim: usize, x: &[f64]) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite coordinate {bad}")));
    }
    Ok(())
}

/// Falling factorial `b (b-1) ... (b-a+1)`.
fn falling(b: u32, a: u32) -> f64 {
    (0..a).map(|k| (b - k) as f64).product()
}

fn poly_partial(terms: &[(MultiIndex, f64)], alpha: &MultiIndex, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    'term: for (beta, coeff) in terms {
        let mut factor = *coeff;
        let mut pow = 1.0;
        for (i, &xi) in x.iter().enumerate() {
            let (b, a) = (beta.get(i), alpha.get(i));
            if b < a {
                continue 'term;
            }
            factor *= falling(b, a);
            pow *= xi.powi((b - a) as i32);
        }
        acc += factor * pow;
    }
    acc
}

/// Central finite differences for the numeric kind.
///
/// Per-axis steps are `max(1, |x_i|) * eps^(1/(2+m))` with `m = |alpha|`,
/// the usual truncation/round-off balance (for first derivatives this is the
/// classic `eps^(1/3)`). Orders two and above additionally Richardson-
/// extrapolate the whole stencil once, killing the `h^2` term; without that,
/// third-order round-off sits near 1e-6 and would drown the exactness checks
/// this crate runs against polynomial oracles.
fn fd_partial(f: &(dyn Fn(&[f64]) -> f64 + Send + Sync), alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
    let m = alpha.order();
    if m == 0 {
        return Ok(f(x));
    }
    if let Some(axis) = (0..alpha.dim()).find(|&i| alpha.get(i) > MAX_FD_AXIS_ORDER) {
        return Err(Error::DerivativeOrder {
            requested: alpha.get(axis) as usize,
            max: MAX_FD_AXIS_ORDER as usize,
        });
    }
    let scales: Vec<f64> = x.iter().map(|xi| xi.abs().max(1.0)).collect();
    if m == 1 {
        let base = f64::EPSILON.powf(1.0 / 3.0);
        let steps: Vec<f64> = scales.iter().map(|s| s * base).collect();
        let mut xt = x.to_vec();
        return Ok(stencil_recurse(f, alpha, &mut xt, &steps, 0));
    }
    let base = f64::EPSILON.powf(1.0 / (4.0 + m as f64));
    let coarse_steps: Vec<f64> = scales.iter().map(|s| s * base).collect();
    let fine_steps: Vec<f64> = coarse_steps.iter().map(|h| h / 2.0).collect();
    let mut xt = x.to_vec();
    let coarse = stencil_recurse(f, alpha, &mut xt, &coarse_steps, 0);
    let fine = stencil_recurse(f, alpha, &mut xt, &fine_steps, 0);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// O(h^2) central stencils per axis order, applied as a tensor product by
/// recursing over axes with nonzero requested order.
fn stencil_recurse(
    f: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
    alpha: &MultiIndex,
    x: &mut Vec<f64>,
    steps: &[f64],
    from_axis: usize,
) -> f64 {
    let Some(axis) = (from_axis..alpha.dim()).find(|&i| alpha.get(i) > 0) else {
        return f(x);
    };
    let m = alpha.get(axis);
    let stencil: &[(i32, f64)] = match m {
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("per-axis order checked in fd_partial"),
    };
    let h = steps[axis];
    let x0 = x[axis];
    let mut acc = 0.0;
    for &(offset, coeff) in stencil {
        x[axis] = x0 + offset as f64 * h;
        acc += coeff * stencil_recurse(f, alpha, x, steps, axis + 1);
    }
    x[axis] = x0;
    acc / h.powi(m as i32)
}

/// All multi-indices of the given total order, first axis descending, so for
/// `(d=2, total=2)` the order is `(2,0), (1,1), (0,2)`. With `even_only` the
/// odd-entry indices are pruned. Count without the filter is
/// `C(total + d - 1, d - 1)`.
pub fn enumerate_multi_indices(dim: usize, total: u32, even_only: bool) -> Vec<MultiIndex> {
    assert!(dim >= 1, "dimension must be >= 1");
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(dim);
    enumerate_rec(dim, total, even_only, &mut prefix, &mut out);
    out
}

fn enumerate_rec(
    dim_left: usize,
    total_left: u32,
    even_only: bool,
    prefix: &mut Vec<u32>,
    out: &mut Vec<MultiIndex>,
) {
    if dim_left == 1 {
        if !(even_only && !total_left.is_multiple_of(2)) {
            let mut entries = prefix.clone();
            entries.push(total_left);
            out.push(MultiIndex::new(entries));
        }
        return;
    }
    for v in (0..=total_left).rev() {
        if even_only && v % 2 != 0 {
            continue;
        }
        prefix.push(v);
        enumerate_rec(dim_left - 1, total_left - v, even_only, prefix, out);
        prefix.pop();
    }
}

/// Parses one polynomial term line: `coeff a1 a2 ... ad`, whitespace
/// separated, decimal coefficient (correctly rounded), integer exponents.
pub fn parse_term_line(dim: usize, line: &str) -> Result<(MultiIndex, f64)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != dim + 1 {
        return Err(Error::InvalidField(format!(
            "term line needs 1 coefficient + {dim} exponents, got {} tokens",
            tokens.len()
        )));
    }
    let coeff: f64 = tokens[0]
        .parse()
        .map_err(|_| Error::InvalidField(format!("bad coefficient `{}`", tokens[0])))?;
    let mut entries = Vec::with_capacity(dim);
    for tok in &tokens[1..] {
        let e: u32 =
            tok.parse().map_err(|_| Error::InvalidField(format!("bad exponent `{tok}`")))?;
        entries.push(e);
    }
    Ok((MultiIndex::new(entries), coeff))
}

/// Parses a block of term lines (one term per nonempty line, `#` comments
/// allowed) into a polynomial field.
pub fn parse_polynomial(dim: usize, text: &str) -> Result<ScalarField> {
    let mut terms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let term = parse_term_line(dim, line)
            .map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
        terms.push(term);
    }
    ScalarField::polynomial(dim, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mi(entries: &[u32]) -> MultiIndex {
        MultiIndex::new(entries.to_vec())
    }

    /// x^2 y as a polynomial in two variables.
    fn x2y() -> ScalarField {
        ScalarField::monomial(mi(&[2, 1]), 1.0).unwrap()
    }

    #[test]
    fn multi_index_basics() {
        let a = mi(&[2, 0, 3]);
        assert_eq!(a.order(), 5);
        assert_eq!(a.factorial(), 12.0);
        assert!(!a.is_even());
        assert!(mi(&[2, 0, 4]).is_even());
        assert!(mi(&[0]).is_even());
    }

    #[test]
    fn partial_of_x2y_is_constant_two() {
        let f = x2y();
        assert_eq!(f.eval_partial(&mi(&[2, 1]), &[5.0, 7.0]).unwrap(), 2.0);
        assert_eq!(f.eval_partial(&mi(&[2, 1]), &[-3.0, 0.25]).unwrap(), 2.0);
    }

    #[test]
    fn zeroth_partial_is_plain_evaluation() {
        let f = x2y();
        assert_eq!(f.eval_partial(&mi(&[0, 0]), &[5.0, 7.0]).unwrap(), 175.0);
        assert_eq!(f.eval(&[5.0, 7.0]).unwrap(), 175.0);
    }

    #[test]
    fn second_partial_of_negative_square() {
        let f = ScalarField::monomial(mi(&[2]), -1.0).unwrap();
        assert_eq!(f.eval_partial(&mi(&[2]), &[0.3]).unwrap(), -2.0);

        let numeric = ScalarField::numeric(1, 4, |x| -x[0] * x[0]).unwrap();
        let fd = numeric.eval_partial(&mi(&[2]), &[0.3]).unwrap();
        assert!((fd - -2.0).abs() < 1e-6, "fd second derivative {fd}");
    }

    #[test]
    fn gradient_and_hessian_examples() {
        // f = -x^2 - 2 y^2
        let f = ScalarField::polynomial(
            2,
            vec![(mi(&[2, 0]), -1.0), (mi(&[0, 2]), -2.0)],
        )
        .unwrap();
        assert_eq!(f.gradient(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let h = f.hessian(&[0.0, 0.0]).unwrap();
        assert_eq!(h.rows(), vec![vec![-2.0, 0.0], vec![0.0, -4.0]]);

        let f = ScalarField::monomial(mi(&[1, 1]), 1.0).unwrap();
        let h = f.hessian(&[1.0, 1.0]).unwrap();
        assert_eq!(h.rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn mixed_partials_commute_for_polynomials() {
        // Symbolic per-axis differentiation applied in both axis orders must
        // agree with the direct multi-index oracle.
        fn diff(terms: &[(MultiIndex, f64)], axis: usize) -> Vec<(MultiIndex, f64)> {
            terms
                .iter()
                .filter(|(b, _)| b.get(axis) > 0)
                .map(|(b, c)| {
                    let mut e = b.entries().to_vec();
                    e[axis] -= 1;
                    (MultiIndex::new(e), c * b.get(axis) as f64)
                })
                .collect()
        }
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..30 {
            let terms: Vec<(MultiIndex, f64)> = (0..4)
                .map(|_| {
                    (
                        mi(&[rng.gen_range(0..4u32), rng.gen_range(0..4u32)]),
                        rng.gen_range(-2.0..2.0),
                    )
                })
                .collect();
            let xy = diff(&diff(&terms, 0), 1);
            let yx = diff(&diff(&terms, 1), 0);
            let f = ScalarField::polynomial(2, terms).unwrap();
            let f_xy = ScalarField::polynomial(2, xy).unwrap();
            let f_yx = ScalarField::polynomial(2, yx).unwrap();
            let x = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let direct = f.eval_partial(&mi(&[1, 1]), &x).unwrap();
            let a = f_xy.eval(&x).unwrap();
            let b = f_yx.eval(&x).unwrap();
            let tol = 1e-13 * (1.0 + direct.abs());
            assert!((a - b).abs() <= tol);
            assert!((direct - a).abs() <= tol);
        }
    }

    #[test]
    fn finite_differences_match_polynomial_oracle() {
        // Random single terms, random points, every |alpha| <= 3: the numeric
        // kind must land within 1e-6 relative of the exact oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..60 {
            let dim = rng.gen_range(1..=3usize);
            let beta = MultiIndex::new((0..dim).map(|_| rng.gen_range(0..=3u32)).collect());
            let coeff = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let exact_field = ScalarField::monomial(beta.clone(), coeff).unwrap();
            let cloned = exact_field.clone();
            let numeric =
                ScalarField::numeric(dim, 4, move |x| cloned.eval(x).unwrap()).unwrap();
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.2..1.2)).collect();
            for order in 1..=3u32 {
                for alpha in enumerate_multi_indices(dim, order, false) {
                    if (0..dim).any(|i| alpha.get(i) > 3) {
                        continue;
                    }
                    let exact = exact_field.eval_partial(&alpha, &x).unwrap();
                    let fd = numeric.eval_partial(&alpha, &x).unwrap();
                    let rel = (fd - exact).abs() / exact.abs().max(1.0);
                    assert!(
                        rel < 1e-6,
                        "order {order} alpha {:?}: fd {fd} vs exact {exact} (rel {rel:.3e})",
                        alpha.entries()
                    );
                }
            }
        }
    }

    #[test]
    fn builtin_partials_frozen_values() {
        let e = ScalarField::builtin(2, Builtin::ExpSum).unwrap();
        let want = (0.4f64 + 0.3).exp();
        assert_eq!(e.eval_partial(&mi(&[2, 1]), &[0.4, 0.3]).unwrap(), want);

        let c = ScalarField::builtin(1, Builtin::CosSum).unwrap();
        assert_eq!(c.eval_partial(&mi(&[1]), &[0.7]).unwrap(), -(0.7f64.sin()));
        assert_eq!(c.eval_partial(&mi(&[4]), &[0.7]).unwrap(), 0.7f64.cos());

        let g = ScalarField::builtin(1, Builtin::GaussBump).unwrap();
        // second derivative of exp(-t^2/2) at 0 is -1
        assert_eq!(g.eval_partial(&mi(&[2]), &[0.0]).unwrap(), -1.0);

        let one = ScalarField::builtin(3, Builtin::One).unwrap();
        assert_eq!(one.eval(&[0.1, 0.2, 0.3]).unwrap(), 1.0);
        assert_eq!(one.eval_partial(&mi(&[0, 1, 0]), &[0.1, 0.2, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn builtin_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &which in &[Builtin::ExpSum, Builtin::CosSum, Builtin::GaussBump] {
            for dim in 1..=2usize {
                let exact = ScalarField::builtin(dim, which).unwrap();
                let cloned = exact.clone();
                let numeric =
                    ScalarField::numeric(dim, 4, move |x| cloned.eval(x).unwrap()).unwrap();
                for _ in 0..10 {
                    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    for order in 1..=3u32 {
                        for alpha in enumerate_multi_indices(dim, order, false) {
                            let a = exact.eval_partial(&alpha, &x).unwrap();
                            let b = numeric.eval_partial(&alpha, &x).unwrap();
                            assert!(
                                (a - b).abs() / a.abs().max(1.0) < 1e-6,
                                "{which:?} alpha {:?}: {a} vs {b}",
                                alpha.entries()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn numeric_kind_enforces_declared_order() {
        let f = ScalarField::numeric(1, 2, |x| x[0].powi(4)).unwrap();
        assert!(f.eval_partial(&mi(&[2]), &[0.5]).is_ok());
        match f.eval_partial(&mi(&[3]), &[0.5]) {
            Err(Error::DerivativeOrder { requested: 3, max: 2 }) => {}
            other => panic!("expected order error, got {other:?}"),
        }
    }

    #[test]
    fn enumeration_frozen_cases() {
        let idx = enumerate_multi_indices(2, 2, true);
        let got: Vec<&[u32]> = idx.iter().map(|m| m.entries()).collect();
        assert_eq!(got, vec![&[2, 0][..], &[0, 2][..]]);

        let idx = enumerate_multi_indices(3, 0, false);
        assert_eq!(idx.len(), 1);
        assert_eq!(idx[0].entries(), &[0, 0, 0]);

        assert!(enumerate_multi_indices(2, 3, true).is_empty());
    }

    #[test]
    fn enumeration_counts_and_uniqueness() {
        fn choose(n: u64, k: u64) -> u64 {
            let mut num = 1u64;
            let mut den = 1u64;
            for i in 0..k {
                num *= n - i;
                den *= i + 1;
            }
            num / den
        }
        for dim in 1..=4usize {
            for total in 0..=6u32 {
                let all = enumerate_multi_indices(dim, total, false);
                assert_eq!(all.len() as u64, choose((total as usize + dim - 1) as u64, (dim - 1) as u64));
                let mut seen = std::collections::HashSet::new();
                for m in &all {
                    assert_eq!(m.order(), total);
                    assert!(seen.insert(m.entries().to_vec()), "duplicate index");
                }
                let even = enumerate_multi_indices(dim, total, true);
                for m in &even {
                    assert!(m.is_even());
                }
            }
        }
    }

    #[test]
    fn construction_caps() {
        assert!(ScalarField::polynomial(7, vec![]).is_err());
        assert!(ScalarField::monomial(mi(&[17]), 1.0).is_err());
        assert!(ScalarField::monomial(mi(&[1]), f64::INFINITY).is_err());
        // Degree exactly at the cap is allowed.
        assert!(ScalarField::monomial(mi(&[16]), 1.0).is_ok());
    }

    #[test]
    fn point_validation() {
        let f = x2y();
        assert!(matches!(
            f.eval(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(f.eval(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn term_line_parsing() {
        let (alpha, coeff) = parse_term_line(1, "-0.5 2").unwrap();
        assert_eq!(alpha.entries(), &[2]);
        assert_eq!(coeff, -0.5);

        let f = parse_polynomial(2, "# hessian with cross term\n-0.5 2 0\n1 1 1\n").unwrap();
        assert_eq!(f.eval(&[2.0, 3.0]).unwrap(), -2.0 + 6.0);

        assert!(parse_term_line(2, "1.0 2").is_err());
        assert!(parse_term_line(1, "abc 2").is_err());
        assert!(parse_term_line(1, "1.0 -2").is_err());
        match parse_polynomial(1, "1 0\noops") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error with line 2, got {other:?}"),
        }
    }

    #[test]
    fn decimal_parsing_is_correctly_rounded() {
        // 0.1 parses to the nearest f64, bit-for-bit.
        let (_, coeff) = parse_term_line(1, "0.1 0").unwrap();
        assert_eq!(coeff.to_bits(), 0.1f64.to_bits());
    }
}
