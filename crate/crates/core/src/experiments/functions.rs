use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};

/// Regression functions used by the simulation studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum TestFunction {
    /// `sin(10πx)/(2x) + (x−1)⁴` on `[0.5, 2.5]`.
    Gramacy1d,
    /// `2/(‖x−0.5‖+1) + 0.5/(‖x−0.7‖+1)` on `[0,1]⁵`.
    Sun5d,
    /// `β₁x + β₂sin(θx)` on `[0,1]`.
    SineLinear { theta: f64, beta1: f64, beta2: f64 },
}

/// Slack allowed outside the domain for rounding in rescaled coordinates.
const DOMAIN_SLACK: f64 = 1e-12;

impl TestFunction {
    pub fn dim(&self) -> usize {
        match self {
            TestFunction::Sun5d => 5,
            _ => 1,
        }
    }

    pub fn domain(&self) -> Vec<(f64, f64)> {
        match self {
            TestFunction::Gramacy1d => vec![(0.5, 2.5)],
            TestFunction::Sun5d => vec![(0.0, 1.0); 5],
            TestFunction::SineLinear { .. } => vec![(0.0, 1.0)],
        }
    }

    /// Value at `x` in original coordinates.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(DpmError::Domain(format!(
                "expected a point of dimension {}, got {}",
                self.dim(),
                x.len()
            )));
        }
        for (v, (lo, hi)) in x.iter().zip(self.domain()) {
            if !(*v >= lo - DOMAIN_SLACK && *v <= hi + DOMAIN_SLACK) {
                return Err(DpmError::Domain(format!("{v} lies outside [{lo}, {hi}]")));
            }
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match *self {
            TestFunction::Gramacy1d => {
                let t = x[0];
                (10.0 * PI * t).sin() / (2.0 * t) + (t - 1.0).powi(4)
            }
            TestFunction::Sun5d => {
                let d = |c: f64| x.iter().map(|v| (v - c).powi(2)).sum::<f64>().sqrt();
                2.0 / (d(0.5) + 1.0) + 0.5 / (d(0.7) + 1.0)
            }
            TestFunction::SineLinear { theta, beta1, beta2 } => beta1 * x[0] + beta2 * (theta * x[0]).sin(),
        }
    }
}

/// Free-function form of [`TestFunction::eval`].
pub fn test_function_eval(f: &TestFunction, x: &[f64]) -> Result<f64> {
    f.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let sun = TestFunction::Sun5d.eval(&[0.5; 5]).unwrap();
        assert!((sun - (2.0 + 0.5 / (1.0 + 0.2_f64.sqrt()))).abs() < 1e-15);
        assert!(TestFunction::Gramacy1d.eval(&[1.0]).unwrap().abs() < 1e-14);
        let sl = TestFunction::SineLinear { theta: 3.0, beta1: 1.0, beta2: 3.0 };
        assert_eq!(sl.eval(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn out_of_domain() {
        assert!(matches!(TestFunction::Gramacy1d.eval(&[0.2]), Err(DpmError::Domain(_))));
        assert!(matches!(TestFunction::Sun5d.eval(&[0.5; 4]), Err(DpmError::Domain(_))));
        assert!(TestFunction::Gramacy1d.eval(&[f64::NAN]).is_err());
    }
}
