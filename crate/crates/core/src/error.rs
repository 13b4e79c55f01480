use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("precondition not satisfied: {0}")]
    Precondition(String),

    #[error("iteration did not converge after {iterations} iterations (last residual {residual:.3e})")]
    IterationFailure { iterations: usize, residual: f64 },

    #[error("step size too large: dt * alpha = {0:.3} >= 1")]
    StepSize(f64),

    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing config field `{0}`")]
    MissingField(String),

    #[error("numeric failure in {0}")]
    Numeric(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
