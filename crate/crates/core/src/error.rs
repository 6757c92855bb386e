use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A single record failed validation.
    #[error("image {image_id:?}, record {index}: {reason}")]
    Validation {
        image_id: String,
        index: usize,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    /// No sweep cell satisfies the minimum-F1 constraint.
    #[error("no cell reaches min F1 {min_f1:.4}; best achievable F1 is {}", fmt_best(*best_f1))]
    Infeasible { min_f1: f64, best_f1: Option<f64> },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unknown {kind} strategy {name:?} (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_best(best: Option<f64>) -> String {
    match best {
        Some(f1) => format!("{f1:.4}"),
        None => "undefined (no evaluated cells)".to_string(),
    }
}

impl Error {
    pub(crate) fn validation(image_id: &str, index: usize, reason: impl Into<String>) -> Self {
        Error::Validation {
            image_id: image_id.to_string(),
            index,
            reason: reason.into(),
        }
    }
}
