use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("joint graph is disconnected: components {components:?}")]
    Disconnected { components: Vec<Vec<String>> },

    #[error("mobility error at theta = {theta_deg:.4} deg: expected 1 DoF, found {dof} (singular value gap {gap:.3e})")]
    Mobility { theta_deg: f64, dof: usize, gap: f64 },

    #[error("drive joint `{joint}` has a vanishing null-space component ({component:.3e})")]
    DriveSelection { joint: String, component: f64 },

    #[error("inconsistent joint rates: loop residual {residual:.3e} exceeds {limit:.1e}")]
    Consistency { residual: f64, limit: f64 },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("finite-difference step underflow (h = {0:e})")]
    StepUnderflow(f64),

    #[error("empty trajectory log")]
    EmptyLog,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
