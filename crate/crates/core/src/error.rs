use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("theta = {theta} is outside the log-MGF domain ({lo}, {hi})")]
    Domain { theta: f64, lo: f64, hi: f64 },

    #[error("parameter constraint violated: {0}")]
    Constraint(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("empty constraint set: Pareto support [1, inf) does not meet ({lo}, {hi})")]
    EmptyConstraint { lo: f64, hi: f64 },

    /// A walk stretch or a breaker scan would exceed the configured cap.
    /// Carries enough context to report the run as capped.
    #[error("path cap {cap} exceeded in {stage}: needs index {needed}")]
    PathCap {
        stage: &'static str,
        needed: f64,
        cap: u64,
    },

    #[error("chi-square pooling left {cells} cell(s); at least 2 are required")]
    DegeneratePooling { cells: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_path_cap(&self) -> bool {
        matches!(self, Error::PathCap { .. })
    }
}
