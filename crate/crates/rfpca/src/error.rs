use std::path::PathBuf;

use rfpca_core::Error as CoreError;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    /// Reformulation conditions fail for some group.
    #[error("{0}")]
    Conditions(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl AppError {
    /// Process exit status: 2 validation, 3 condition check, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Conditions(_) => 3,
            AppError::Core(e) => match e {
                CoreError::ConditionsViolated { .. } => 3,
                CoreError::SubgradientSingularity { .. }
                | CoreError::NegativeQuadratic { .. }
                | CoreError::LipschitzUndefined { .. }
                | CoreError::NotOrthonormal { .. }
                | CoreError::RankDeficient
                | CoreError::EmptyTrace => 4,
                _ => 2,
            },
            _ => 2,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        AppError::Validation(msg.into())
    }
}
