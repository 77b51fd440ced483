//! Matérn kernels, the projected kernel orthogonal to the linear functions,
//! kernel ridge regression and GCV.

mod basis;
mod gcv;
mod matern;
mod projected;
mod ridge;

pub use basis::{orthonormal_linear_basis, OrthonormalBasis};
pub use gcv::{default_gcv_grid, gcv_curve, gcv_select_lambda, GcvPoint, GcvResult};
pub use matern::{matern_eval, MaternSpec};
pub use projected::{
    default_quadrature_budget, matern_cross, matern_gram, projected_kernel_eval, Kernel, PointMoments,
    ProjectedKernel,
};
pub use ridge::{kernel_ridge_fit, rkhs_norm_sq, KernelRidgeFitter, KernelRidgeModel, LambdaRule};
