use thiserror::Error;

/// Crate-wide error type.
///
/// Variants group into the exit-code classes used by the CLI:
/// config/usage (2), numeric instability (3), basis truncation (4) and
/// analysis degeneracy (5). Everything else exits 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("index range [{from}, {to}) invalid for length {len}")]
    Range { from: usize, to: usize, len: usize },

    #[error("numeric instability at t = {t}: {what} (reduce dt)")]
    Instability { t: f64, what: String },

    #[error("classical integration diverged at step {step} (t = {t})")]
    Divergence { step: usize, t: f64 },

    #[error("Fock-basis truncation violated at t = {t}: tail population {tail:.3e} (increase n_basis)")]
    Truncation { t: f64, tail: f64 },

    #[error("series too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("no reference point has >= {n_min} neighbors at epsilon = {epsilon:.3e}")]
    InsufficientNeighbors { epsilon: f64, n_min: usize },

    #[error("only {got} reference points qualified at epsilon = {epsilon:.3e}; need {need} for a stable curve")]
    InsufficientReferences { epsilon: f64, got: usize, need: usize },

    #[error("all {0} (m, epsilon) combinations failed to produce a divergence curve")]
    PanelEmpty(usize),

    #[error("fewer than 2 segments fit: segment_len {segment_len} on series of length {len}")]
    Segmentation { segment_len: usize, len: usize },

    #[error("frequency band [{lo}, {hi}] contains no spectrum bins")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("fewer than 2 strobe times fall inside the series (period {period})")]
    InsufficientDuration { period: f64 },

    #[error("section has {got} points; classification needs at least {need}")]
    InsufficientPoints { got: usize, need: usize },

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Instability { .. } | Error::Divergence { .. } => 3,
            Error::Truncation { .. } => 4,
            Error::Range { .. }
            | Error::TooShort { .. }
            | Error::Degenerate(_)
            | Error::InsufficientNeighbors { .. }
            | Error::InsufficientReferences { .. }
            | Error::PanelEmpty(_)
            | Error::Segmentation { .. }
            | Error::EmptyBand { .. }
            | Error::InsufficientDuration { .. }
            | Error::InsufficientPoints { .. }
            | Error::Report(_) => 5,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
