//! One-dimensional study: a bounded linear class plus kernel ridge on the
//! projected Matérn kernel, fitted to the Gramacy–Lee function.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{BoundFrame, LinearFitter};
use crate::error::Result;
use crate::fitter::{fit_double_penalty, StoppingRule};
use crate::kernel::{Kernel, KernelRidgeFitter, MaternSpec, ProjectedKernel};
use crate::model::{Dataset, Descriptor};
use crate::numerics::{rng::task_index, DenseMatrix, SeededRng};

use super::functions::TestFunction;
use super::{mean, median, ExperimentResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Config {
    pub n: usize,
    pub nu: f64,
    /// Matérn range parameter for distances on the original domain.
    pub phi: f64,
    /// Variance of the Gaussian noise.
    pub noise_var: f64,
    pub reps: usize,
    /// Evenly spaced evaluation points across the domain.
    pub test_grid: usize,
    /// Bound on `β₁² + β₂²` for `f(x) = β₁x + β₂` on the original domain.
    pub linear_norm_bound: f64,
    pub change_tol: f64,
    pub max_iters: usize,
}

impl Default for Example1Config {
    fn default() -> Self {
        Self {
            n: 20,
            nu: 3.5,
            phi: 1.0,
            noise_var: 0.1,
            reps: 100,
            test_grid: 201,
            linear_norm_bound: 100.0,
            change_tol: 1e-6,
            max_iters: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Replication {
    pub mspe: f64,
    pub iterations: usize,
    /// λ chosen by GCV on the first residual.
    pub lambda: f64,
    pub bound_active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example1Row {
    pub mean_mspe: f64,
    pub median_mspe: f64,
    pub mean_iterations: f64,
    pub max_iterations: usize,
    /// Fraction of replications that stopped within three iterations.
    pub share_within_3_iterations: f64,
    pub bound_active_replications: usize,
    pub median_lambda: f64,
}

struct Shared {
    kernel: Kernel,
    test_unit: DenseMatrix,
    truth: Vec<f64>,
}

fn shared(config: &Example1Config) -> Result<Shared> {
    let h = TestFunction::Gramacy1d;
    let (lo, hi) = h.domain()[0];
    // fits run on the unit interval; rescale φ so distances match the domain
    let spec = MaternSpec::new(config.nu, 1, config.phi * (hi - lo))?;
    let kernel = Kernel::Projected(Arc::new(ProjectedKernel::with_default_rule(spec)?));
    let k = config.test_grid.max(2);
    let t: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
    let truth = t
        .iter()
        .map(|u| h.eval(&[lo + (hi - lo) * u]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Shared {
        kernel,
        test_unit: DenseMatrix::column_vector(&t),
        truth,
    })
}

fn replication(config: &Example1Config, shared: &Shared, rng: &mut SeededRng) -> Result<Example1Replication> {
    let h = TestFunction::Gramacy1d;
    let omega = h.domain();
    let (lo, hi) = omega[0];
    let sd = config.noise_var.sqrt();
    let x: Vec<f64> = (0..config.n).map(|_| rng.uniform_range(lo, hi)).collect();
    let y: Vec<f64> = x.iter().map(|v| h.eval_unchecked(&[*v]) + sd * rng.normal()).collect();
    let data = Dataset::from_domain(DenseMatrix::column_vector(&x), y, omega)?;

    let f_class = LinearFitter::new(true).with_norm_bound(config.linear_norm_bound, BoundFrame::Original);
    let g_class = KernelRidgeFitter::with_gcv(shared.kernel.clone(), config.n);
    let stop = StoppingRule {
        max_iters: config.max_iters,
        change_tol: config.change_tol,
        ..StoppingRule::default()
    };
    let fit = fit_double_penalty(&data, &f_class, &g_class, stop)?;
    let (f_t, g_t) = fit.predict_parts(&shared.test_unit);
    let mspe = mean(
        &f_t.iter()
            .zip(&g_t)
            .zip(&shared.truth)
            .map(|((f, g), t)| (f + g - t).powi(2))
            .collect::<Vec<_>>(),
    );
    let lambda = match fit.g_hat.descriptor() {
        Descriptor::KernelExpansion(m) => m.lambda,
        _ => f64::NAN,
    };
    let bound_active = matches!(fit.f_hat.descriptor(), Descriptor::Linear(m) if m.projected);
    Ok(Example1Replication {
        mspe,
        iterations: fit.iterations(),
        lambda,
        bound_active,
    })
}

/// Runs one replication with the generator for `(seed, rep)`.
pub fn example1_replication(config: &Example1Config, seed: u64, rep: u64) -> Result<Example1Replication> {
    replication(config, &shared(config)?, &mut SeededRng::derive(seed, task_index(0, rep)))
}

pub fn run_example1(config: &Example1Config, seed: u64) -> Result<ExperimentResult<Example1Config, Example1Row>> {
    let start = Instant::now();
    let shared = shared(config)?;
    let reps: Vec<Example1Replication> = (0..config.reps)
        .into_par_iter()
        .map(|r| replication(config, &shared, &mut SeededRng::derive(seed, task_index(0, r as u64))))
        .collect::<Result<_>>()?;
    let mspe: Vec<f64> = reps.iter().map(|r| r.mspe).collect();
    let iters: Vec<f64> = reps.iter().map(|r| r.iterations as f64).collect();
    let lambdas: Vec<f64> = reps.iter().map(|r| r.lambda).collect();
    let within = reps.iter().filter(|r| r.iterations <= 3).count();
    let active = reps.iter().filter(|r| r.bound_active).count();
    if active > 0 {
        log::info!("linear norm bound active in {active} of {} replications", reps.len());
    }
    let row = Example1Row {
        mean_mspe: mean(&mspe),
        median_mspe: median(&mspe),
        mean_iterations: mean(&iters),
        max_iterations: reps.iter().map(|r| r.iterations).max().unwrap_or(0),
        share_within_3_iterations: within as f64 / reps.len().max(1) as f64,
        bound_active_replications: active,
        median_lambda: median(&lambdas),
    };
    Ok(ExperimentResult {
        experiment: "example1".into(),
        seed,
        config: config.clone(),
        rows: vec![row],
        wall_time: start.elapsed(),
    })
}
