use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CarpetError {
    #[error("malformed carpet specification: {0}")]
    MalformedSpec(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("infeasible layout: {0}")]
    InfeasibleLayout(String),

    #[error("perturbation too large: validation failed after {attempts} attempts")]
    PerturbationTooLarge { attempts: usize },

    #[error("fiber maps are not contractive (max |b'| bound = {0})")]
    NonContractive(f64),

    #[error("transfer operator is not primitive: {0}")]
    NonPrimitive(String),

    #[error("no convergence in {what} after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("no sign change for {what} on [{lo}, {hi}]")]
    BracketFailure { what: &'static str, lo: f64, hi: f64 },

    #[error("degenerate family: log A is cohomologous to a constant (variance {variance:e})")]
    DegenerateFamily { variance: f64 },

    #[error("no root of the level-n equation in [0, 1]")]
    NoRootInUnitInterval,

    #[error("optimizer hit the iteration limit ({0})")]
    IterationLimit(usize),

    #[error("render depth {depth} needs {regions} regions (limit 1e6)")]
    TooDeep { depth: usize, regions: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CarpetError {
    fn from(err: std::io::Error) -> Self {
        CarpetError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CarpetError>;
