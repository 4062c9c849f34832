use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("already complex: analytic conversion needs a real-valued signal")]
    AlreadyComplex,

    #[error("tolerance too large: eps {eps} must be below the window peak 1.0")]
    ToleranceTooLarge { eps: f64 },

    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),

    #[error("WAV parse error: {0}")]
    WavParse(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("base smoothing precondition violated: sigma_t {sigma_t} exceeds 1/sigma_f = {limit}")]
    BasePrecondition { sigma_t: f64, limit: f64 },

    #[error(
        "kernel narrower than base smoothing at cell ({t}, {f}): residual covariance is not PSD; \
         use k_exact for this grid"
    )]
    ResidualNotPsd { t: usize, f: usize },

    #[error("not time-shared: k_equivariant needs a per-frequency kernel grid")]
    NotTimeShared,

    #[error("window of {taps} taps is longer than the {frame}-point analysis frame")]
    WindowTooLong { taps: usize, frame: usize },

    #[error("unknown preset: {0}")]
    UnknownPreset(String),

    #[error("non-positive pooled feature {value} at frequency row {row}")]
    NonPositiveFeature { row: usize, value: f64 },

    #[error("non-finite loss (offending parameter index {index:?})")]
    NonFiniteLoss { index: Option<usize> },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("empty data set: {0}")]
    EmptyData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed {what} file {path}: {msg}")]
    Format { what: &'static str, path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
