//! CSV ingestion, repeated K-fold cross-validation and tuning sweeps along
//! the transect `log₁₀λ_f + log₁₀λ_g = c` or over a full grid.

mod cv;
mod io;
mod sweep;
mod synthetic;

pub use cv::{cross_validated_predictions, pearson, CvConfig, CvPredictions, Flexible, Interpretable, LearnerPair};
pub use io::{load_csv, parse_log_grid, write_dataset_csv};
pub use sweep::{grid_sweep, transect_sweep, CellFailure, DiagnosticRow, GridReport, SweepReport, TransectConfig};
pub use synthetic::{synthetic_additive, SyntheticSpec};
