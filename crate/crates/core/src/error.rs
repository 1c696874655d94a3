use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph generation failed after {attempts} attempts: {reason}")]
    GraphGeneration { attempts: usize, reason: String },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    PowerIteration { iterations: usize, residual: f64 },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("parameter region is empty: binding constraint `{constraint}` ({detail})")]
    Infeasible { constraint: String, detail: String },

    #[error("non-finite state at iteration {k} (agent {agent})")]
    Diverged { k: usize, agent: usize },

    #[error("scaling exhausted at iteration {k}: s(k) = {s:e}")]
    ScalingExhausted { k: usize, s: f64 },

    #[error("{0}")]
    Mismatch(String),

    #[error("fit requires {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
