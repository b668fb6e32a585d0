use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },

    #[error("invalid `{field}`: {reason}")]
    Invariant { field: &'static str, reason: String },

    #[error("dimension mismatch in {what}: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("operation not available in this mode: {0}")]
    ModeMismatch(String),

    #[error("missing cross-interval state: {0}")]
    MissingState(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("powers must be strictly positive, got rho_s={rho_s}, rho_d={rho_d}")]
    NonPositivePower { rho_s: f64, rho_d: f64 },

    #[error("infeasible energy budget {0}")]
    InfeasibleBudget(f64),

    #[error("work estimate {requested:.3e} exceeds the configured budget {budget:.3e}")]
    ResourceBudget { requested: f64, budget: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
