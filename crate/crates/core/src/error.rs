use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be even and at least 8")]
    InvalidGridSize(usize),

    #[error("field has {found} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("mollifier index {0} is below the minimum of 3")]
    MollifierIndex(usize),

    #[error("mollifier index {n} is not resolved by a grid of {n_points} points")]
    UnresolvedMollifier { n: usize, n_points: usize },

    #[error("peakon amplitude must be nonzero")]
    ZeroPeakon,

    #[error("measure-type initial data must be mollified before evolution (set mollify_n)")]
    MissingMollification,

    #[error("{path}: {message}")]
    Config { path: String, message: String },

    #[error("sampling mismatch: {0}")]
    SamplingMismatch(String),

    #[error("q_x became non-positive for seed {seed} at t = {t}")]
    CharacteristicCollapse { seed: f64, t: f64 },

    #[error("time step budget exceeded: {steps} steps requested, limit is {limit}")]
    StepBudget { steps: u64, limit: u64 },

    #[error("blow-up guard triggered at t = {t}: sup |u_x| = {sup_ux} exceeds {threshold}")]
    BlowupGuard { t: f64, sup_ux: f64, threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
