use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("coordinate out of range: lon {lon}, lat {lat} (|lat| must be < 85.06, |lon| <= 180)")]
    CoordinateRange { lon: f64, lat: f64 },

    #[error("{file}: row {row}, column `{column}`: {message}")]
    Schema {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{file}: row {row}: {message}")]
    Integrity {
        file: String,
        row: usize,
        message: String,
    },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value for segment `{segment}`, column `{column}`")]
    NonFinite { segment: String, column: String },

    #[error("sigma calibration failed: {0}")]
    Calibration(String),

    #[error("no calibrated sigma for anchor category `{0}`")]
    MissingSigma(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("local system singular at location {index} even after ridge fallback")]
    SingularSystem { index: usize },

    #[error("adjusted R\u{b2} undefined: n = {n}, effective parameters = {p_eff:.4}")]
    UndefinedR2 { n: usize, p_eff: f64 },

    #[error("missing tidal period `{0}`")]
    MissingPeriod(String),

    #[error("malformed model output ({message}); raw text: {raw:?}")]
    ModelParse { message: String, raw: String },

    #[error("model client transport failure (retriable): {0}")]
    Transport(String),

    #[error("no offline fixture for request {hash}")]
    FixtureMiss { hash: String },

    #[error("reference database: {0}")]
    ReferenceDb(String),

    #[error("evaluation: {0}")]
    Evaluation(String),
}

impl Error {
    /// Input or configuration problems, as opposed to failures during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::CoordinateRange { .. }
                | Error::Schema { .. }
                | Error::Integrity { .. }
                | Error::Io { .. }
                | Error::Config(_)
                | Error::NonFinite { .. }
                | Error::MissingPeriod(_)
                | Error::ReferenceDb(_)
        )
    }

    pub fn is_retriable(&self) -> bool {
        matches!(self, Error::Transport(_))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
