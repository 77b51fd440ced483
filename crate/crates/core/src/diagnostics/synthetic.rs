use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};
use crate::model::Dataset;
use crate::numerics::{DenseMatrix, SeededRng};

/// `y = Σ β_j x_j + w·(sin(2πx₁) + 4(x₂ − ½)² − ⅓) + σε` with uniform
/// features on `[0,1]^p`. The nonlinear term only uses the first two
/// features (the first alone when `p = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub linear: Vec<f64>,
    pub nonlinear_weight: f64,
    pub noise_sd: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            linear: vec![2.0, -1.0, 0.5],
            nonlinear_weight: 1.0,
            noise_sd: 0.3,
        }
    }
}

impl SyntheticSpec {
    fn nonlinear(&self, x: &[f64]) -> f64 {
        let mut v = (2.0 * PI * x[0]).sin();
        if x.len() > 1 {
            v += 4.0 * (x[1] - 0.5).powi(2) - 1.0 / 3.0;
        }
        self.nonlinear_weight * v
    }
}

pub fn synthetic_additive(spec: &SyntheticSpec, n: usize, rng: &mut SeededRng) -> Result<Dataset> {
    let p = spec.linear.len();
    if p == 0 {
        return Err(DpmError::Validation("need at least one feature".into()));
    }
    let x = DenseMatrix::from_fn(n, p, |_, _| rng.uniform());
    let y = (0..n)
        .map(|i| {
            let row = x.row(i);
            let lin: f64 = row.iter().zip(&spec.linear).map(|(a, b)| a * b).sum();
            lin + spec.nonlinear(row) + spec.noise_sd * rng.normal()
        })
        .collect();
    Dataset::new(x, y)
}
