use thiserror::Error;

use crate::model::IterationRecord;

#[derive(Debug, Error)]
pub enum DpmError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    /// A component fit failed mid-run. The records completed so far are kept.
    #[error("fit aborted at iteration {iteration}: {source}")]
    FitAborted {
        iteration: usize,
        trace: Vec<IterationRecord>,
        #[source]
        source: Box<DpmError>,
    },

    #[error("cross-validation cell failed (repeat {repeat}, fold {fold}): {source}")]
    CvFold {
        repeat: usize,
        fold: usize,
        #[source]
        source: Box<DpmError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DpmError {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            DpmError::Numerical(_) | DpmError::Estimation(_) => true,
            DpmError::FitAborted { source, .. } | DpmError::CvFold { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, DpmError>;
