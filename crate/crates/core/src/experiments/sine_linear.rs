//! Convergence of the alternating fit for `y = β₁x + β₂sin(θx) + ε` with the
//! classes `{βx}` and `{β sin(θx)}`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{BasisFunction, FiniteBasisFitter, LeastSquares, LinearFitter};
use crate::error::Result;
use crate::fitter::{estimate_convergence_slope, fit_double_penalty_with, FitOptions, StoppingRule};
use crate::numerics::{rng::task_index, DenseMatrix, SeededRng};
use crate::separability::{empirical_theta, psi};
use crate::model::Dataset;

use super::{mean, ExperimentResult};

/// Settings shared by the fixed-`n` and varying-`n` studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineLinearSettings {
    pub reps: usize,
    /// Variance of the Gaussian noise.
    pub noise_var: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Iterations stop once `‖f_m − f̂‖_n + ‖g_m − ĝ‖_n` falls to this value,
    /// `(f̂, ĝ)` being the joint least-squares solution.
    pub reference_tol: f64,
    pub max_iters: usize,
    /// Iterations `m ≤ slope_burn_in` are left out of the slope fit.
    pub slope_burn_in: usize,
    /// Distances below this are left out of the slope fit.
    pub slope_floor: f64,
}

impl Default for SineLinearSettings {
    fn default() -> Self {
        Self {
            reps: 100,
            noise_var: 0.1,
            beta1: 1.0,
            beta2: 3.0,
            reference_tol: 1e-10,
            max_iters: 100_000,
            slope_burn_in: 3,
            slope_floor: 1e-10,
        }
    }
}

/// One replication of the sine-linear study.
#[derive(Debug, Clone, PartialEq)]
pub struct SineLinearReplication {
    pub iterations: usize,
    /// `None` when too few iterations survive burn-in and floor.
    pub slope: Option<f64>,
    /// Distance to the joint least-squares fit after each iteration.
    pub distances: Vec<f64>,
    /// Empirical canonical correlation of `x` and `sin(θx)` on the sample.
    pub theta_hat: f64,
}

/// Draws `n` uniform points, fits, and records distances to the joint
/// least-squares solution.
pub fn sine_linear_replication(
    theta: f64,
    n: usize,
    settings: &SineLinearSettings,
    rng: &mut SeededRng,
) -> Result<SineLinearReplication> {
    let x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
    let s: Vec<f64> = x.iter().map(|v| (theta * v).sin()).collect();
    let sd = settings.noise_var.sqrt();
    let y: Vec<f64> = x
        .iter()
        .zip(&s)
        .map(|(a, b)| settings.beta1 * a + settings.beta2 * b + sd * rng.normal())
        .collect();
    let data = Dataset::new(DenseMatrix::column_vector(&x), y)?;

    let joint = DenseMatrix::from_fn(n, 2, |i, j| if j == 0 { x[i] } else { s[i] });
    let b = LeastSquares::new(joint)?.solve(data.y())?;
    let f_ref: Vec<f64> = x.iter().map(|v| b[0] * v).collect();
    let g_ref: Vec<f64> = s.iter().map(|v| b[1] * v).collect();

    let f_class = LinearFitter::new(false);
    let g_class = FiniteBasisFitter::new(vec![BasisFunction::new("sin", move |p| (theta * p[0]).sin())]);
    let options = FitOptions {
        reference: Some((f_ref, g_ref)),
        ..FitOptions::with_stop(StoppingRule {
            max_iters: settings.max_iters,
            objective_tol: 0.0,
            change_tol: 0.0,
            reference_tol: settings.reference_tol,
        })
    };
    let fit = fit_double_penalty_with(&data, &f_class, &g_class, &options)?;
    let distances = fit.reference_distances().unwrap_or_default();
    let slope = estimate_convergence_slope(&distances, settings.slope_burn_in, settings.slope_floor)
        .ok()
        .map(|e| e.slope);
    let theta_hat = empirical_theta(&DenseMatrix::column_vector(&x), &DenseMatrix::column_vector(&s))?.theta_estimate;
    Ok(SineLinearReplication {
        iterations: fit.iterations(),
        slope,
        distances,
        theta_hat,
    })
}

fn replicate(theta: f64, n: usize, settings: &SineLinearSettings, seed: u64, block: u64) -> Result<Vec<SineLinearReplication>> {
    (0..settings.reps)
        .into_par_iter()
        .map(|r| sine_linear_replication(theta, n, settings, &mut SeededRng::derive(seed, task_index(block, r as u64))))
        .collect()
}

/// `(mean slope, mean iterations)`; the slope averages only replications
/// where it could be estimated.
fn summarize(reps: &[SineLinearReplication]) -> (f64, f64, usize) {
    let slopes: Vec<f64> = reps.iter().filter_map(|r| r.slope).collect();
    let iters: Vec<f64> = reps.iter().map(|r| r.iterations as f64).collect();
    (mean(&slopes), mean(&iters), slopes.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    pub thetas: Vec<f64>,
    pub n: usize,
    #[serde(flatten)]
    pub settings: SineLinearSettings,
}

impl Default for Table1Config {
    fn default() -> Self {
        Self {
            thetas: vec![2.0, 3.0, 3.5, 4.0],
            n: 50,
            settings: SineLinearSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub theta: f64,
    pub psi: f64,
    pub two_log_psi: f64,
    pub mean_slope: f64,
    pub mean_iterations: f64,
    pub abs_difference: f64,
    pub slope_replications: usize,
}

/// Fixed sample size, varying frequency θ.
pub fn run_table1(config: &Table1Config, seed: u64) -> Result<ExperimentResult<Table1Config, Table1Row>> {
    let start = Instant::now();
    let mut rows = Vec::with_capacity(config.thetas.len());
    for (block, &theta) in config.thetas.iter().enumerate() {
        let reps = replicate(theta, config.n, &config.settings, seed, block as u64)?;
        let (mean_slope, mean_iterations, used) = summarize(&reps);
        let psi = psi(theta)?;
        let two_log_psi = 2.0 * psi.ln();
        rows.push(Table1Row {
            theta,
            psi,
            two_log_psi,
            mean_slope,
            mean_iterations,
            abs_difference: (two_log_psi - mean_slope).abs(),
            slope_replications: used,
        });
    }
    Ok(ExperimentResult {
        experiment: "table1".into(),
        seed,
        config: config.clone(),
        rows,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Config {
    pub sizes: Vec<usize>,
    pub theta: f64,
    #[serde(flatten)]
    pub settings: SineLinearSettings,
}

impl Default for Table2Config {
    fn default() -> Self {
        Self {
            sizes: vec![20, 50, 100, 150, 200],
            theta: 3.0,
            settings: SineLinearSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub n: usize,
    pub mean_slope: f64,
    pub mean_iterations: f64,
    pub abs_difference: f64,
    pub slope_replications: usize,
}

/// Fixed θ, varying sample size.
pub fn run_table2(config: &Table2Config, seed: u64) -> Result<ExperimentResult<Table2Config, Table2Row>> {
    let start = Instant::now();
    let two_log_psi = 2.0 * psi(config.theta)?.ln();
    let mut rows = Vec::with_capacity(config.sizes.len());
    for (block, &n) in config.sizes.iter().enumerate() {
        let reps = replicate(config.theta, n, &config.settings, seed, block as u64)?;
        let (mean_slope, mean_iterations, used) = summarize(&reps);
        rows.push(Table2Row {
            n,
            mean_slope,
            mean_iterations,
            abs_difference: (two_log_psi - mean_slope).abs(),
            slope_replications: used,
        });
    }
    Ok(ExperimentResult {
        experiment: "table2".into(),
        seed,
        config: config.clone(),
        rows,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_contract_geometrically() {
        let settings = SineLinearSettings::default();
        let rep = sine_linear_replication(3.0, 50, &settings, &mut SeededRng::new(4)).unwrap();
        let d = &rep.distances;
        assert!(*d.last().unwrap() <= settings.reference_tol);
        // one-dimensional classes: each pass contracts by exactly θ̂²
        for w in d.windows(2).skip(1).take(10) {
            assert!((w[1] / w[0] - rep.theta_hat.powi(2)).abs() < 1e-6);
        }
    }

    #[test]
    fn small_table_is_deterministic() {
        let config = Table1Config {
            thetas: vec![4.0],
            settings: SineLinearSettings {
                reps: 4,
                ..SineLinearSettings::default()
            },
            ..Table1Config::default()
        };
        let a = run_table1(&config, 9).unwrap();
        let b = run_table1(&config, 9).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
    }
}
