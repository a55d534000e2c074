use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CloakError>;

#[derive(Debug, Error)]
pub enum CloakError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("optimizer did not converge after {iterations} iterations (gradient inf-norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("input is constant; correlation is undefined")]
    ConstantInput,

    #[error("user is not positively targeted (score {score} < threshold {threshold})")]
    NotPositive { score: f64, threshold: f64 },

    #[error("no explanation found within limits after {expansions} expansions")]
    NotFound { expansions: usize },

    #[error("every cross-validation fold was skipped")]
    AllFoldsSkipped,

    #[error("empty population: {0}")]
    EmptyPopulation(String),

    #[error("cloak directive references metafeatures but no metafeature model was supplied")]
    MissingMetafeatures,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CloakError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            CloakError::Parse { .. } => "parse",
            CloakError::Io { .. } => "io",
            CloakError::InvalidArgument(_) => "invalid_argument",
            CloakError::UnknownTask(_) => "unknown_task",
            CloakError::UnknownUser(_) => "unknown_user",
            CloakError::SingleClass => "single_class",
            CloakError::NotConverged { .. } => "not_converged",
            CloakError::ConstantInput => "constant_input",
            CloakError::NotPositive { .. } => "not_positive",
            CloakError::NotFound { .. } => "not_found",
            CloakError::AllFoldsSkipped => "all_folds_skipped",
            CloakError::EmptyPopulation(_) => "empty_population",
            CloakError::MissingMetafeatures => "missing_metafeatures",
            CloakError::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CloakError::Io {
            path: path.into(),
            source,
        }
    }
}
