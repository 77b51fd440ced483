//! Five-dimensional study: linear class plus Matérn kernel ridge on a
//! maximin Latin hypercube, tracked over the first few iterations.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::LinearFitter;
use crate::error::Result;
use crate::fitter::{fit_double_penalty_with, FitOptions, StoppingRule};
use crate::kernel::{matern_cross, matern_gram, Kernel, KernelRidgeFitter, MaternSpec};
use crate::model::{empirical_norm, Dataset, Descriptor};
use crate::numerics::{greedy_maximin_lhs, halton_points, maximin_lhs, rng::task_index, DenseMatrix, SeededRng};

use super::functions::TestFunction;
use super::{mean, ExperimentResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example2Config {
    /// Kernel ridge penalties λ; the solver uses `K + nλI`.
    pub lambdas: Vec<f64>,
    /// Noise standard deviations.
    pub noise_levels: Vec<f64>,
    /// Rows are reported after each of iterations `1..=iterations`.
    pub iterations: usize,
    pub n: usize,
    pub reps: usize,
    /// Leading Halton points (from index 1) used as the test set.
    pub test_points: usize,
    pub nu: f64,
    pub phi: f64,
    pub design: DesignKind,
}

/// Construction of the maximin Latin hypercube training design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DesignKind {
    /// Sequential greedy placement with `dup·m` candidates per point.
    Greedy { dup: usize },
    /// Best of `restarts` coordinate-swap optimised candidates.
    Swap { restarts: usize },
}

impl Default for Example2Config {
    fn default() -> Self {
        Self {
            lambdas: vec![1.0, 0.1, 0.001, 1e-9],
            noise_levels: vec![0.1, 0.01],
            iterations: 5,
            n: 50,
            reps: 100,
            test_points: 1000,
            nu: 3.5,
            phi: 1.0,
            design: DesignKind::Greedy { dup: 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example2Row {
    pub lambda: f64,
    pub noise: f64,
    pub iteration: usize,
    pub training_error: f64,
    pub prediction_error: f64,
    /// Empirical norm of `f̂` over the test points.
    pub linear_l2: f64,
    /// Empirical norm of `ĝ` over the test points.
    pub nonlinear_l2: f64,
}

/// `[training, prediction, linear, nonlinear]` for every (λ, noise, iteration).
type Metrics = Vec<[f64; 4]>;

struct Shared {
    spec: MaternSpec,
    test: DenseMatrix,
    truth: Vec<f64>,
}

fn replication(config: &Example2Config, shared: &Shared, rng: &mut SeededRng) -> Result<Metrics> {
    let h = TestFunction::Sun5d;
    let n = config.n;
    let x = match config.design {
        DesignKind::Greedy { dup } => greedy_maximin_lhs(n, 5, rng, dup),
        DesignKind::Swap { restarts } => maximin_lhs(n, 5, rng, restarts),
    };
    let signal: Vec<f64> = (0..n).map(|i| h.eval_unchecked(x.row(i))).collect();
    let z: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let gram = Arc::new(matern_gram(&shared.spec, &x));
    let cross = matern_cross(&shared.spec, &shared.test, &x);
    let f_class = LinearFitter::new(true);
    let options = FitOptions {
        record_snapshots: true,
        ..FitOptions::with_stop(StoppingRule::max_iters(config.iterations))
    };

    let mut out = Vec::with_capacity(config.lambdas.len() * config.noise_levels.len() * config.iterations);
    for &lambda in &config.lambdas {
        let g_class = KernelRidgeFitter::new(Kernel::Matern(shared.spec), lambda).with_gram(gram.clone());
        for &sd in &config.noise_levels {
            let y: Vec<f64> = signal.iter().zip(&z).map(|(s, e)| s + sd * e).collect();
            let data = Dataset::new(x.clone(), y)?;
            let fit = fit_double_penalty_with(&data, &f_class, &g_class, &options)?;
            // an exact fixed point stops early; later iterations repeat it
            let last = fit.snapshots.len() - 1;
            for (f, g) in (0..config.iterations).map(|i| &fit.snapshots[i.min(last)]) {
                let resid: Vec<f64> = data
                    .y()
                    .iter()
                    .zip(f.fitted())
                    .zip(g.fitted())
                    .map(|((y, f), g)| y - f - g)
                    .collect();
                let f_test = f.predict(&shared.test);
                let g_test = match g.descriptor() {
                    Descriptor::KernelExpansion(m) => cross.matvec(m.alpha())?,
                    _ => g.predict(&shared.test),
                };
                let err: Vec<f64> = f_test
                    .iter()
                    .zip(&g_test)
                    .zip(&shared.truth)
                    .map(|((f, g), t)| (f + g - t).powi(2))
                    .collect();
                let training = empirical_norm(&resid).powi(2);
                out.push([training, mean(&err), empirical_norm(&f_test), empirical_norm(&g_test)]);
            }
        }
    }
    Ok(out)
}

pub fn run_example2(config: &Example2Config, seed: u64) -> Result<ExperimentResult<Example2Config, Example2Row>> {
    let start = Instant::now();
    let spec = MaternSpec::new(config.nu, 5, config.phi)?;
    let pts = halton_points(config.test_points, 5)?;
    let test = DenseMatrix::from_rows(&pts)?;
    let truth = pts.iter().map(|p| TestFunction::Sun5d.eval(p)).collect::<Result<Vec<_>>>()?;
    let shared = Shared { spec, test, truth };
    let reps: Vec<Metrics> = (0..config.reps)
        .into_par_iter()
        .map(|r| replication(config, &shared, &mut SeededRng::derive(seed, task_index(0, r as u64))))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut k = 0;
    for &lambda in &config.lambdas {
        for &noise in &config.noise_levels {
            for iteration in 1..=config.iterations {
                let avg = |j: usize| mean(&reps.iter().map(|m| m[k][j]).collect::<Vec<_>>());
                rows.push(Example2Row {
                    lambda,
                    noise,
                    iteration,
                    training_error: avg(0),
                    prediction_error: avg(1),
                    linear_l2: avg(2),
                    nonlinear_l2: avg(3),
                });
                k += 1;
            }
        }
    }
    Ok(ExperimentResult {
        experiment: "example2".into(),
        seed,
        config: config.clone(),
        rows,
        wall_time: start.elapsed(),
    })
}
