//! Higher-order Laplace asymptotics for integrals with slowly perturbed
//! phases, together with the experiment harness that checks the predicted
//! error rates against an independent quadrature oracle.
//!
//! The integrals have the shape
//!
//! ```text
//! I_n = int_box exp(n * (h(x) + eps_n * sigma(x))) g(x) dx,   eps_n = s * n^{-p},
//! ```
//!
//! with `h` attaining a unique nondegenerate interior maximum at `c` and the
//! amplitude `g` allowed to vanish there to even order `k`. The leading
//! behaviour is `I_n = exp(n h(c)) (n^{-d/2 - k/2} K + O(n^{-q}))` where `K`
//! is a Gaussian-moment sum over the Hessian spectrum and
//! `q = d/2 + k/2 + min(p - 1, 1/2)`.
//!
//! The crate provides:
//!
//! * [`fields`]: polynomial / builtin / black-box scalar fields with exact or
//!   finite-difference partial derivatives;
//! * [`symmat`]: dense symmetric matrices with a Jacobi eigensolver,
//!   adjugates, and the Weyl eigenvalue-gap bound;
//! * [`critpoint`]: problem descriptions, maximizer location and tracking of
//!   the perturbed maximizer `c_n`, assumption checks, and drift-rate fits;
//! * [`asymptotics`]: Gaussian moments (diagonal formula and the independent
//!   pairing expansion), the predicted exponent `q`, and the leading-order
//!   approximation of `I_n`;
//! * [`oracle`]: an adaptive Gauss-Legendre reference integrator, refined
//!   geometrically toward the maximizer;
//! * [`harness`]: residual-decay experiments, verdict classification, and a
//!   built-in problem suite;
//! * [`probfile`]: a small text format for problem descriptions.
//!
//! Large factors `exp(n h(c))` are kept in split `(log_scale, mantissa)`
//! form throughout, so nothing overflows even at `n` in the millions.

pub mod asymptotics;
pub mod critpoint;
pub mod error;
pub mod fields;
pub mod harness;
pub mod oracle;
pub mod probfile;
pub mod symmat;

pub use asymptotics::{
    approx_integral, exponent_q, gaussian_moment_diag, gaussian_moment_wick, ApproxVariant,
    LeadingCoefficient, ScaledValue,
};
pub use critpoint::{
    drift_rates, find_max_interior, track_c_n, verify_assumptions, CriticalReport, DriftFit,
    DriftRates, Flag, ProblemSpec, VerifyOptions,
};
pub use error::{Error, Result};
pub use fields::{Builtin, MultiIndex, ScalarField};
pub use harness::{
    builtin_suite, default_n_list, fit_rate, run_lemma_suite, run_suite, run_theorem_experiment,
    LemmaSuite, RateFit, TheoremExperiment, Verdict,
};
pub use oracle::{gauss_legendre_rule, reference_integral, QuadratureConfig, ReferenceValue};
pub use probfile::parse_problem;
pub use symmat::{weyl_gap, EigenDecomposition, SymMatrix};
