use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};
use crate::numerics::{bessel_k, gamma};

/// Isotropic Matérn correlation with Sobolev smoothness `nu` in dimension `p`
/// and range parameter `phi`; the Bessel order is `μ = ν − p/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternSpec {
    pub nu: f64,
    pub p: usize,
    pub phi: f64,
}

impl MaternSpec {
    pub fn new(nu: f64, p: usize, phi: f64) -> Result<Self> {
        let spec = Self { nu, p, phi };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(DpmError::Validation("Matérn dimension must be at least 1".into()));
        }
        if !(self.mu() > 0.0) || !self.nu.is_finite() {
            return Err(DpmError::Validation(format!(
                "Matérn smoothness ν = {} must exceed p/2 = {}",
                self.nu,
                self.p as f64 / 2.0
            )));
        }
        if !(self.phi > 0.0) || !self.phi.is_finite() {
            return Err(DpmError::Validation(format!("Matérn range φ must be positive, got {}", self.phi)));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.nu - self.p as f64 / 2.0
    }

    /// Correlation at distance `r`; exactly 1 at `r = 0`.
    pub fn eval_distance(&self, r: f64) -> f64 {
        let mu = self.mu();
        let z = 2.0 * mu.sqrt() * self.phi * r;
        if z == 0.0 {
            return 1.0;
        }
        let k = bessel_k(mu, z).expect("order and argument validated positive");
        if k.saturated {
            // K_μ overflows only as z → 0, where the correlation tends to 1
            return 1.0;
        }
        let log_scale = mu * z.ln() - gamma(mu).ln() - (mu - 1.0) * std::f64::consts::LN_2;
        (log_scale + k.value.ln()).exp().min(1.0)
    }

    /// Correlation between two points.
    pub fn eval(&self, s: &[f64], t: &[f64]) -> f64 {
        let r = s.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        self.eval_distance(r)
    }
}

/// Free-function form of [`MaternSpec::eval`].
pub fn matern_eval(spec: &MaternSpec, s: &[f64], t: &[f64]) -> f64 {
    spec.eval(s, t)
}
