//! Estimation error of the partially linear model `y = β₀ + β₁x + g*(x) + ε`
//! as the sample grows, with `g* = cos(2πx)` orthogonal to linear functions
//! and kernel ridge on the projected Matérn kernel.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::LinearFitter;
use crate::error::Result;
use crate::fitter::{fit_double_penalty, StoppingRule};
use crate::kernel::{Kernel, KernelRidgeFitter, MaternSpec, ProjectedKernel};
use crate::model::{Dataset, Descriptor};
use crate::numerics::{gauss_legendre_01, rng::task_index, DenseMatrix, SeededRng};

use super::{median, ExperimentResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub sizes: Vec<usize>,
    pub seeds: usize,
    /// Variance of the Gaussian noise.
    pub noise_var: f64,
    /// `(β₀, β₁)`.
    pub beta: (f64, f64),
    pub nu: f64,
    pub phi: f64,
    /// `λ = lambda_scale · n^{−2ν/(2ν+1)}`.
    pub lambda_scale: f64,
    pub change_tol: f64,
    pub max_iters: usize,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self {
            sizes: vec![25, 50, 100, 200],
            seeds: 20,
            noise_var: 0.1,
            beta: (1.0, 2.0),
            nu: 3.5,
            phi: 1.0,
            lambda_scale: 0.01,
            change_tol: 1e-8,
            max_iters: 5000,
        }
    }
}

impl ConsistencyConfig {
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda_scale * (n as f64).powf(-2.0 * self.nu / (2.0 * self.nu + 1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub n: usize,
    pub lambda: f64,
    /// Median over seeds of `‖ĝ − g*‖_{L₂}`.
    pub median_g_error: f64,
    /// Median over seeds of `‖β̂ − β*‖₂`.
    pub median_beta_error: f64,
}

fn g_star(x: f64) -> f64 {
    (2.0 * PI * x).cos()
}

pub fn run_consistency(
    config: &ConsistencyConfig,
    seed: u64,
) -> Result<ExperimentResult<ConsistencyConfig, ConsistencyRow>> {
    let start = Instant::now();
    let spec = MaternSpec::new(config.nu, 1, config.phi)?;
    let kernel = Kernel::Projected(Arc::new(ProjectedKernel::with_default_rule(spec)?));
    let rule = gauss_legendre_01(64)?;
    let nodes = DenseMatrix::from_rows(rule.points())?;
    let sd = config.noise_var.sqrt();
    let (b0, b1) = config.beta;

    let mut rows = Vec::with_capacity(config.sizes.len());
    for (block, &n) in config.sizes.iter().enumerate() {
        let lambda = config.lambda(n);
        let errors: Vec<(f64, f64)> = (0..config.seeds)
            .into_par_iter()
            .map(|s| -> Result<(f64, f64)> {
                let mut rng = SeededRng::derive(seed, task_index(block as u64, s as u64));
                let x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
                let y: Vec<f64> = x.iter().map(|v| b0 + b1 * v + g_star(*v) + sd * rng.normal()).collect();
                let data = Dataset::new(DenseMatrix::column_vector(&x), y)?;
                let stop = StoppingRule {
                    max_iters: config.max_iters,
                    change_tol: config.change_tol,
                    ..StoppingRule::default()
                };
                let fit = fit_double_penalty(
                    &data,
                    &LinearFitter::new(true),
                    &KernelRidgeFitter::new(kernel.clone(), lambda),
                    stop,
                )?;
                let g_hat = fit.g_hat.predict(&nodes);
                let g_err = rule
                    .weights()
                    .iter()
                    .zip(&g_hat)
                    .zip(rule.points())
                    .map(|((w, g), q)| w * (g - g_star(q[0])).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let beta_err = match fit.f_hat.descriptor() {
                    Descriptor::Linear(m) => ((m.intercept - b0).powi(2) + (m.beta[0] - b1).powi(2)).sqrt(),
                    _ => f64::NAN,
                };
                Ok((g_err, beta_err))
            })
            .collect::<Result<_>>()?;
        rows.push(ConsistencyRow {
            n,
            lambda,
            median_g_error: median(&errors.iter().map(|e| e.0).collect::<Vec<_>>()),
            median_beta_error: median(&errors.iter().map(|e| e.1).collect::<Vec<_>>()),
        });
    }
    Ok(ExperimentResult {
        experiment: "consistency".into(),
        seed,
        config: config.clone(),
        rows,
        wall_time: start.elapsed(),
    })
}
