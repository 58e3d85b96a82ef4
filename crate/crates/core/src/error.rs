use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("constraint residual has no sign change after {0} bracket doublings")]
    BracketNotFound(usize),

    #[error("root tolerance {tol:e} not met after {iters} bisections (residual {residual:e})")]
    RootTolerance { tol: f64, iters: usize, residual: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid solver config: {0}")]
    InvalidConfig(String),

    #[error("information matrix has non-finite entries")]
    NonFiniteInformation,

    #[error("non-finite dual value at iteration {0}")]
    NonFiniteDual(usize),

    #[error("projection failed at iteration {iter}: {source}")]
    Projection {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("oracle cap exceeded: C({n}, {k}) = {count} subsets > cap {cap}")]
    OracleCap { n: usize, k: usize, count: u128, cap: u128 },

    #[error("every size-{k} subset has a singular information matrix")]
    AllSubsetsSingular { k: usize },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
