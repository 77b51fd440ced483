//! Interpretable and flexible function classes, each solving the penalized
//! residual problem of the alternating fitter.

mod basis;
mod lasso;
mod linear;
mod lsq;
mod stumps;

pub use basis::{BasisFunction, FiniteBasisFitter, FiniteBasisModel};
pub use lasso::{fit_lasso, lasso_lambda_max, LassoFitter};
pub use linear::{fit_linear_ols, BoundFrame, LinearFitter, LinearModel};
pub use lsq::LeastSquares;
pub use stumps::{fit_boosted_stumps, Stump, StumpEnsemble, StumpsFitter};
