//! Double penalty additive regression.
//!
//! A response is modelled as `f(x) + g(x)` where `f` comes from an
//! interpretable class (linear, finite basis, sparse linear) and `g` from a
//! flexible one (kernel ridge on a Matérn or projected Matérn kernel, boosted
//! stumps). Both components carry their own convex penalty and are fitted by
//! cyclic partial-residual minimisation.
//!
//! Module map:
//!
//! * [`numerics`]: special functions, quadrature, low-discrepancy and
//!   space-filling designs, seeded randomness and small dense linear algebra.
//! * [`model`]: datasets, empirical geometry, the fitter contract and fit records.
//! * [`classes`]: interpretable and flexible function classes.
//! * [`kernel`]: Matérn kernels, projected kernels, kernel ridge and GCV.
//! * [`fitter`]: the alternating double penalty solver and rate instrumentation.
//! * [`separability`]: analytic, quadrature and empirical separability measures.
//! * [`experiments`]: seeded simulation studies with tabular output.
//! * [`diagnostics`]: CSV ingestion, repeated K-fold CV and tuning sweeps.

pub mod classes;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod fitter;
pub mod kernel;
pub mod model;
pub mod numerics;
pub mod separability;

pub use error::{DpmError, Result};
pub use fitter::{fit_double_penalty, FitOptions, StoppingRule};
pub use model::{AdditiveFit, Dataset, FunctionClassFitter, Member};
