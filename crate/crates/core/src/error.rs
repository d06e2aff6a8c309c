use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree overflow: {0} exceeds top degree {1}")]
    DegreeOverflow(usize, usize),

    #[error("degree {0} out of range 0..={1}")]
    DegreeOutOfRange(usize, usize),

    #[error("expected bigrade {expected}, got {got}")]
    WrongBigrade { expected: String, got: String },

    #[error("flux quantization failure: mode n = {0} is not an integer")]
    FluxQuantization(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),

    #[error("operation not defined in degree {degree}: {reason}")]
    WrongDegree { degree: usize, reason: &'static str },

    #[error("singular Lefschetz block (smallest singular value {0:e})")]
    SingularLefschetz(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("eigensolver did not converge: worst residual {worst_residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, worst_residual: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
