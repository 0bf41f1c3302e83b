use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// One message per violated condition; the message names the condition.
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error("step rejected: {0}")]
    StepRejected(String),
    #[error("degenerate body: {0}")]
    DegenerateBody(String),
    #[error("body configuration rejected: {0}")]
    BodyRejected(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Process exit status for the CLI: 1 config, 2 invariant, 3 solver.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::BodyRejected(_) => 1,
            SimError::Invariant(_) | SimError::StepRejected(_) | SimError::DegenerateBody(_) => 2,
            SimError::Solver(_) => 3,
            SimError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
