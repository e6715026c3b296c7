use thiserror::Error;

use crate::sdp::SolverStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {what} (last relative change {change:.3e} at {nodes} nodes)")]
    Quadrature { what: &'static str, change: f64, nodes: usize },

    #[error("singular Fisher information: {0}")]
    SingularFim(String),

    #[error("instance infeasible: {0}")]
    Infeasible(String),

    #[error("solver failed with status {status:?}: {detail}")]
    Solver { status: SolverStatus, detail: String },

    #[error("duality gap {gap:.3e} exceeds tolerance {tol:.1e}")]
    DualityGap { gap: f64, tol: f64 },

    #[error("degenerate dual: |z1| = {0:.3e}")]
    DegenerateDual(f64),

    #[error("tightness violation: purified objective {purified:.12e} vs relaxed {relaxed:.12e}")]
    Tightness { purified: f64, relaxed: f64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("matrix file error (line {line}): {msg}")]
    MatrixFile { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable label, used in report status columns.
    pub fn label(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Quadrature { .. } => "quadrature",
            Error::SingularFim(_) => "singular_fim",
            Error::Infeasible(_) => "infeasible",
            Error::Solver { .. } => "solver_failure",
            Error::DualityGap { .. } => "duality_gap",
            Error::DegenerateDual(_) => "degenerate_dual",
            Error::Tightness { .. } => "tightness",
            Error::DegenerateInput(_) => "degenerate_input",
            Error::Config { .. } => "config",
            Error::MatrixFile { .. } => "matrix_file",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }
}
