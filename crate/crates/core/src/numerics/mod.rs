//! Numerical substrate shared by every other module.

pub mod design;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use design::{greedy_maximin_lhs, has_latin_property, maximin_lhs, min_pairwise_distance, random_lhs};
pub use linalg::{cholesky_solve, sym_eig_small, Cholesky, CholeskySolution, DenseMatrix, SymmetricEigen};
pub use quadrature::{gauss_legendre_01, halton, halton_points, tensor_or_qmc_rule, QuadratureRule};
pub use rng::SeededRng;
pub use special::{bessel_k, gamma, BesselK};
