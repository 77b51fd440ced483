use crate::error::{DpmError, Result};
use crate::model::{partial_objective, BoundFitter, Dataset, Descriptor, FunctionClassFitter, Member};
use crate::numerics::DenseMatrix;

use super::linear::LinearModel;

/// L1-penalized linear regression by cyclic coordinate descent on internally
/// standardized features: minimises `(1/n)‖r − c − Zb‖² + λ‖b‖₁` where each
/// column of `Z` has zero mean and unit empirical norm. The intercept `c` is
/// unpenalized and coefficients are reported on the unit-cube feature scale.
#[derive(Debug, Clone)]
pub struct LassoFitter {
    pub lambda: f64,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl LassoFitter {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            max_sweeps: 10_000,
            tol: 1e-10,
        }
    }
}

/// Standardized design plus the state carried between residual fits.
struct Standardized {
    z: DenseMatrix,
    mean: Vec<f64>,
    /// Zero for constant columns, which never enter the model.
    scale: Vec<f64>,
}

impl Standardized {
    fn new(x: &DenseMatrix) -> Self {
        let n = x.rows();
        let p = x.cols();
        let mut z = DenseMatrix::zeros(n, p);
        let mut mean = vec![0.0; p];
        let mut scale = vec![0.0; p];
        for j in 0..p {
            let col = x.column(j);
            let m = col.iter().sum::<f64>() / n as f64;
            let centered: Vec<f64> = col.iter().map(|v| v - m).collect();
            let s = crate::model::empirical_norm(&centered);
            mean[j] = m;
            if s > 1e-12 * (1.0 + m.abs()) {
                scale[j] = s;
                for i in 0..n {
                    z[(i, j)] = centered[i] / s;
                }
            }
        }
        Self { z, mean, scale }
    }
}

struct BoundLasso {
    spec: LassoFitter,
    std: Standardized,
    x: DenseMatrix,
    warm: Vec<f64>,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Result of coordinate descent on the standardized scale.
struct CdResult {
    b: Vec<f64>,
    converged: bool,
    sweeps: usize,
}

fn coordinate_descent(z: &DenseMatrix, active: &[bool], rc: &[f64], lambda: f64, start: &[f64], spec: &LassoFitter) -> CdResult {
    let n = z.rows();
    let p = z.cols();
    let nf = n as f64;
    let mut b = start.to_vec();
    let mut rho = rc.to_vec();
    for j in 0..p {
        if b[j] != 0.0 {
            for i in 0..n {
                rho[i] -= z[(i, j)] * b[j];
            }
        }
    }
    let zt = z.transpose();
    for sweep in 1..=spec.max_sweeps {
        let mut max_change = 0.0_f64;
        for j in (0..p).filter(|&j| active[j]) {
            let col = zt.row(j);
            let corr = col.iter().zip(&rho).map(|(a, r)| a * r).sum::<f64>() / nf;
            let new = soft_threshold(corr + b[j], lambda / 2.0);
            let delta = new - b[j];
            if delta != 0.0 {
                for (r, a) in rho.iter_mut().zip(col) {
                    *r -= a * delta;
                }
                b[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < spec.tol {
            return CdResult { b, converged: true, sweeps: sweep };
        }
    }
    CdResult {
        b,
        converged: false,
        sweeps: spec.max_sweeps,
    }
}

impl BoundLasso {
    fn solve(&mut self, residual: &[f64]) -> Result<(LinearModel, Vec<f64>, f64)> {
        let n = residual.len();
        let r_mean = residual.iter().sum::<f64>() / n as f64;
        let rc: Vec<f64> = residual.iter().map(|r| r - r_mean).collect();
        let active: Vec<bool> = self.std.scale.iter().map(|s| *s > 0.0).collect();
        let cd = coordinate_descent(&self.std.z, &active, &rc, self.spec.lambda, &self.warm, &self.spec);
        if !cd.converged {
            log::warn!(
                "lasso stopped after {} sweeps without reaching tolerance {:e}",
                cd.sweeps,
                self.spec.tol
            );
        }
        let zb = self.std.z.matvec(&cd.b)?;
        let penalty = self.spec.lambda * cd.b.iter().map(|v| v.abs()).sum::<f64>();
        let mut b = cd.b;
        let mut fitted: Vec<f64> = zb.iter().map(|v| v + r_mean).collect();
        let mut penalty_used = penalty;
        // an unconverged iterate may lose to the intercept-only model
        let intercept_only = partial_objective(residual, &vec![r_mean; n], 0.0);
        if partial_objective(residual, &fitted, penalty) > intercept_only {
            b = vec![0.0; b.len()];
            fitted = vec![r_mean; n];
            penalty_used = 0.0;
        }
        self.warm = b.clone();
        let beta: Vec<f64> = b
            .iter()
            .zip(&self.std.scale)
            .map(|(bj, s)| if *s > 0.0 { bj / s } else { 0.0 })
            .collect();
        let intercept = r_mean - beta.iter().zip(&self.std.mean).map(|(b, m)| b * m).sum::<f64>();
        let model = LinearModel {
            beta,
            intercept,
            has_intercept: true,
            norm_bound: None,
            projected: false,
            converged: cd.converged,
        };
        debug_assert_eq!(self.x.cols(), model.beta.len());
        Ok((model, fitted, penalty_used))
    }
}

impl FunctionClassFitter for LassoFitter {
    fn name(&self) -> String {
        format!("lasso({})", self.lambda)
    }

    fn bind(&self, data: &Dataset) -> Result<Box<dyn BoundFitter>> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(DpmError::Validation(format!("lasso λ must be non-negative, got {}", self.lambda)));
        }
        if self.max_sweeps == 0 {
            return Err(DpmError::Validation("lasso needs at least one sweep".into()));
        }
        Ok(Box::new(BoundLasso {
            spec: self.clone(),
            std: Standardized::new(data.x()),
            x: data.x().clone(),
            warm: vec![0.0; data.p()],
        }))
    }
}

impl BoundFitter for BoundLasso {
    fn fit_residual(&mut self, residual: &[f64]) -> Result<Member> {
        let (model, fitted, penalty) = self.solve(residual)?;
        Ok(Member::new(Descriptor::Linear(model), penalty, fitted))
    }
}

/// One-shot LASSO fit of `residual`.
pub fn fit_lasso(data: &Dataset, residual: &[f64], lambda: f64, max_sweeps: usize, tol: f64) -> Result<LinearModel> {
    let spec = LassoFitter { lambda, max_sweeps, tol };
    let member = spec.bind(data)?.fit_residual(residual)?;
    match member.descriptor() {
        Descriptor::Linear(m) => Ok(m.clone()),
        _ => unreachable!("lasso returns linear members"),
    }
}

/// Smallest λ for which every standardized slope is zero:
/// `max_j |(2/n)⟨z_j, r − r̄⟩|`.
pub fn lasso_lambda_max(data: &Dataset, residual: &[f64]) -> f64 {
    let std = Standardized::new(data.x());
    let n = residual.len() as f64;
    let mean = residual.iter().sum::<f64>() / n;
    (0..data.p())
        .map(|j| {
            let s: f64 = (0..data.n()).map(|i| std.z[(i, j)] * (residual[i] - mean)).sum();
            (2.0 * s / n).abs()
        })
        .fold(0.0, f64::max)
}
