use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range. `field` names it.
    #[error("invalid parameter `{field}`: {reason}")]
    Param { field: String, reason: String },

    /// A model or vector field failed a sampled assumption check.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical state left the finite range or crossed the divergence cap.
    #[error("divergence at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    /// The rate optimizer found no control meeting the target.
    #[error("no feasible control found (best residual {residual:.3e}, best value {value:.6e})")]
    Infeasible { residual: f64, value: f64 },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(field: &str, reason: impl Into<String>) -> Error {
    Error::Param {
        field: field.to_string(),
        reason: reason.into(),
    }
}
