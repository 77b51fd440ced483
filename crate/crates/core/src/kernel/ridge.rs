use std::sync::Arc;

use crate::error::{DpmError, Result};
use crate::model::{BoundFitter, Dataset, Descriptor, FunctionClassFitter, Member};
use crate::numerics::{Cholesky, DenseMatrix};

use super::gcv::{default_gcv_grid, gcv_curve, GcvResult};
use super::projected::{Kernel, PointMoments};

/// `g(x) = Σ α_i k(x, x_i)`.
#[derive(Debug, Clone)]
pub struct KernelRidgeModel {
    kernel: Kernel,
    centers: DenseMatrix,
    center_moments: Option<Arc<PointMoments>>,
    alpha: Vec<f64>,
    pub lambda: f64,
    rkhs_norm_sq: f64,
}

impl KernelRidgeModel {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn centers(&self) -> &DenseMatrix {
        &self.centers
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// `αᵀKα`.
    pub fn rkhs_norm_sq(&self) -> f64 {
        self.rkhs_norm_sq
    }

    /// Kernel matrix between `x` and the centers.
    pub fn cross(&self, x: &DenseMatrix) -> DenseMatrix {
        match (&self.kernel, &self.center_moments) {
            (Kernel::Projected(pk), Some(cm)) => pk.cross_from_moments(&pk.moments(x), cm),
            (k, _) => k.cross(x, &self.centers),
        }
    }

    pub fn predict(&self, x: &DenseMatrix) -> Vec<f64> {
        self.cross(x).matvec(&self.alpha).expect("cross matrix has one column per center")
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let row = DenseMatrix::from_rows(&[x.to_vec()]).expect("one row");
        self.predict(&row)[0]
    }
}

/// `αᵀKα` of a fitted model.
pub fn rkhs_norm_sq(model: &KernelRidgeModel) -> f64 {
    model.rkhs_norm_sq()
}

fn quad_form(k: &DenseMatrix, a: &[f64]) -> f64 {
    let ka = k.matvec(a).expect("square gram");
    ka.iter().zip(a).map(|(x, y)| x * y).sum::<f64>().max(0.0)
}

/// How the ridge parameter λ is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaRule {
    Fixed(f64),
    /// Chosen by GCV over `grid` (values of λ) on the first residual the
    /// bound fitter sees, then held fixed for the rest of the run.
    Gcv { grid: Vec<f64> },
}

/// Kernel ridge regression `argmin_g ‖r − g‖_n² + λ‖g‖²_H`, solved as
/// `α = (K + nλI)^{-1} r` with penalty value `λαᵀKα`.
#[derive(Debug, Clone)]
pub struct KernelRidgeFitter {
    pub kernel: Kernel,
    pub lambda: LambdaRule,
    /// Gram on the training points, when the caller has already built it.
    pub gram: Option<Arc<DenseMatrix>>,
}

impl KernelRidgeFitter {
    pub fn new(kernel: Kernel, lambda: f64) -> Self {
        Self {
            kernel,
            lambda: LambdaRule::Fixed(lambda),
            gram: None,
        }
    }

    /// λ by GCV on the default grid (20 log-spaced `nλ` in `[1e-6, 1e2]`).
    pub fn with_gcv(kernel: Kernel, n: usize) -> Self {
        Self {
            kernel,
            lambda: LambdaRule::Gcv {
                grid: default_gcv_grid(n),
            },
            gram: None,
        }
    }

    pub fn with_gram(mut self, gram: Arc<DenseMatrix>) -> Self {
        self.gram = Some(gram);
        self
    }
}

struct BoundKernel {
    kernel: Kernel,
    centers: DenseMatrix,
    center_moments: Option<Arc<PointMoments>>,
    gram: Arc<DenseMatrix>,
    rule: LambdaRule,
    solver: Option<(f64, Cholesky)>,
}

/// Factors `K + nλI`.
fn factor_shifted(gram: &DenseMatrix, lambda: f64) -> Result<Cholesky> {
    let mut a = gram.clone();
    a.add_diagonal(gram.rows() as f64 * lambda);
    Cholesky::factor(&a, 0.0)
}

fn solve_refined(gram: &DenseMatrix, shift: f64, chol: &Cholesky, r: &[f64]) -> Vec<f64> {
    let mut x = chol.solve_vec(r);
    let kx = gram.matvec(&x).expect("square gram");
    let resid: Vec<f64> = kx
        .iter()
        .zip(&x)
        .zip(r)
        .map(|((k, xi), ri)| k + shift * xi - ri)
        .collect();
    let corr = chol.solve_vec(&resid);
    x.iter_mut().zip(corr).for_each(|(a, c)| *a -= c);
    x
}

impl BoundKernel {
    fn ensure_solver(&mut self, residual: &[f64]) -> Result<()> {
        if self.solver.is_some() {
            return Ok(());
        }
        let lambda = match &self.rule {
            LambdaRule::Fixed(l) => *l,
            LambdaRule::Gcv { grid } => {
                let GcvResult { best_lambda, .. } = gcv_curve(&self.gram, residual, grid)?;
                log::debug!("GCV selected λ = {best_lambda:e}");
                best_lambda
            }
        };
        let chol = factor_shifted(&self.gram, lambda)?;
        self.solver = Some((lambda, chol));
        Ok(())
    }
}

impl FunctionClassFitter for KernelRidgeFitter {
    fn name(&self) -> String {
        let kind = match &self.kernel {
            Kernel::Matern(_) => "matern",
            Kernel::Projected(_) => "projected-matern",
        };
        match &self.lambda {
            LambdaRule::Fixed(l) => format!("kernel-ridge[{kind}]({l})"),
            LambdaRule::Gcv { .. } => format!("kernel-ridge[{kind}](gcv)"),
        }
    }

    fn bind(&self, data: &Dataset) -> Result<Box<dyn BoundFitter>> {
        if self.kernel.dim() != data.p() {
            return Err(DpmError::Validation(format!(
                "kernel dimension {} differs from data dimension {}",
                self.kernel.dim(),
                data.p()
            )));
        }
        match &self.lambda {
            LambdaRule::Fixed(l) if !(*l > 0.0) || !l.is_finite() => {
                return Err(DpmError::Validation(format!("kernel ridge λ must be positive, got {l}")));
            }
            LambdaRule::Gcv { grid } if grid.is_empty() => {
                return Err(DpmError::Validation("GCV grid must be non-empty".into()));
            }
            _ => {}
        }
        let center_moments = match &self.kernel {
            Kernel::Projected(pk) => Some(Arc::new(pk.moments(data.x()))),
            Kernel::Matern(_) => None,
        };
        let gram = match (&self.gram, &self.kernel, &center_moments) {
            (Some(g), _, _) => {
                if g.rows() != data.n() || g.cols() != data.n() {
                    return Err(DpmError::Validation("precomputed Gram has the wrong size".into()));
                }
                g.clone()
            }
            (None, Kernel::Projected(pk), Some(m)) => Arc::new(pk.gram_from_moments(m)),
            (None, k, _) => Arc::new(k.gram(data.x())),
        };
        Ok(Box::new(BoundKernel {
            kernel: self.kernel.clone(),
            centers: data.x().clone(),
            center_moments,
            gram,
            rule: self.lambda.clone(),
            solver: None,
        }))
    }
}

impl BoundFitter for BoundKernel {
    fn fit_residual(&mut self, residual: &[f64]) -> Result<Member> {
        self.ensure_solver(residual)?;
        let (lambda, chol) = self.solver.as_ref().expect("solver initialised");
        let n = residual.len();
        let shift = n as f64 * lambda + chol.jitter_used();
        let alpha = solve_refined(&self.gram, shift, chol, residual);
        let fitted = self.gram.matvec(&alpha)?;
        let norm_sq = quad_form(&self.gram, &alpha);
        let model = KernelRidgeModel {
            kernel: self.kernel.clone(),
            centers: self.centers.clone(),
            center_moments: self.center_moments.clone(),
            alpha,
            lambda: *lambda,
            rkhs_norm_sq: norm_sq,
        };
        Ok(Member::new(Descriptor::KernelExpansion(model), lambda * norm_sq, fitted))
    }
}

/// One-shot kernel ridge fit of `residual` with fixed λ.
pub fn kernel_ridge_fit(kernel: &Kernel, data: &Dataset, residual: &[f64], lambda: f64) -> Result<KernelRidgeModel> {
    let member = KernelRidgeFitter::new(kernel.clone(), lambda)
        .bind(data)?
        .fit_residual(residual)?;
    match member.descriptor() {
        Descriptor::KernelExpansion(m) => Ok(m.clone()),
        _ => unreachable!("kernel ridge returns kernel expansions"),
    }
}
