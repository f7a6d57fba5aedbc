//! Crate-wide error type.

/// Everything that can go wrong across the crate, from field construction to
/// experiment preconditions. Variants carry enough context to be actionable
/// from the CLI without a backtrace.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("derivative order {requested} exceeds field capability {max}")]
    DerivativeOrder { requested: usize, max: usize },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("jacobi eigenvalue iteration did not converge within {sweeps} sweeps")]
    EigenNonConvergence { sweeps: usize },

    #[error("newton iteration did not converge within {iterations} steps")]
    NewtonNonConvergence { iterations: usize },

    #[error("singular hessian encountered during newton iteration")]
    SingularHessian,

    #[error("grid maximum lies within the boundary margin (boundary maximum)")]
    BoundaryMaximum,

    #[error("hessian is not negative definite at the computed point")]
    NotNegativeDefinite,

    #[error("assumption {tag} violated: {detail}")]
    Assumption { tag: &'static str, detail: String },

    #[error("quadrature node budget exhausted before any value was produced ({needed} nodes needed, budget {budget})")]
    NodeBudget { needed: u64, budget: u64 },

    #[error("quadrature oracle did not converge: {0}")]
    OracleNotConverged(String),

    #[error("rate fit needs at least 3 usable points, got {usable}")]
    TooFewPoints { usable: usize },

    #[error("rate fit requires positive finite values, got {value}")]
    NonPositiveValue { value: f64 },

    #[error("problem file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
