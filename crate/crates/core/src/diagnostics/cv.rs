use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classes::{LassoFitter, LinearFitter, StumpsFitter};
use crate::error::{DpmError, Result};
use crate::fitter::{fit_double_penalty, StoppingRule};
use crate::kernel::{Kernel, KernelRidgeFitter, MaternSpec};
use crate::model::{Dataset, FunctionClassFitter, ZeroFitter};
use crate::numerics::SeededRng;

/// Repeated K-fold cross-validation: each repeat draws a fresh uniformly
/// random partition into `folds` near-equal parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            repeats: 10,
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.folds < 2 {
            return Err(DpmError::Validation(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.repeats == 0 {
            return Err(DpmError::Validation("need at least one repeat".into()));
        }
        if n < self.folds {
            return Err(DpmError::Validation(format!("{n} observations cannot fill {} folds", self.folds)));
        }
        Ok(())
    }

    /// Fold label of every observation in repeat `repeat`.
    pub fn assignment(&self, n: usize, repeat: usize) -> Vec<usize> {
        let perm = SeededRng::derive(self.seed, repeat as u64).permutation(n);
        let mut fold = vec![0; n];
        for (rank, &i) in perm.iter().enumerate() {
            fold[i] = rank % self.folds;
        }
        fold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Interpretable {
    /// Linear with intercept and ridge penalty `λ_f‖f‖_n²`.
    #[default]
    Linear,
    /// Linear with L1 penalty `λ_f‖β‖₁` on standardized features.
    Lasso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Flexible {
    /// Matérn kernel ridge with penalty `λ_g‖g‖²`.
    #[default]
    Kernel,
    /// Boosted stumps with leaf penalty `λ_g Σ leaf²`.
    Stumps,
    /// The zero class; `λ_g` is ignored.
    Zero,
}

/// The two classes of a double penalty fit, instantiated per `(λ_f, λ_g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerPair {
    pub interpretable: Interpretable,
    pub flexible: Flexible,
    /// Matérn smoothness; `None` means `p/2 + 1.5`.
    pub kernel_nu: Option<f64>,
    pub kernel_phi: f64,
    pub stop: StoppingRule,
}

impl LearnerPair {
    pub fn new(interpretable: Interpretable, flexible: Flexible) -> Self {
        Self {
            interpretable,
            flexible,
            kernel_nu: None,
            kernel_phi: 1.0,
            stop: StoppingRule::default(),
        }
    }

    pub fn fitters(
        &self,
        p: usize,
        lambda_f: f64,
        lambda_g: f64,
    ) -> Result<(Box<dyn FunctionClassFitter>, Box<dyn FunctionClassFitter>)> {
        if !(lambda_f >= 0.0) || !lambda_f.is_finite() || !(lambda_g >= 0.0) || !lambda_g.is_finite() {
            return Err(DpmError::Validation(format!(
                "penalties must be finite and non-negative, got λ_f = {lambda_f}, λ_g = {lambda_g}"
            )));
        }
        let f: Box<dyn FunctionClassFitter> = match self.interpretable {
            Interpretable::Linear => Box::new(LinearFitter::new(true).with_ridge(lambda_f)),
            Interpretable::Lasso => Box::new(LassoFitter::new(lambda_f)),
        };
        let g: Box<dyn FunctionClassFitter> = match self.flexible {
            Flexible::Kernel => {
                let nu = self.kernel_nu.unwrap_or(p as f64 / 2.0 + 1.5);
                Box::new(KernelRidgeFitter::new(Kernel::Matern(MaternSpec::new(nu, p, self.kernel_phi)?), lambda_g))
            }
            Flexible::Stumps => Box::new(StumpsFitter::new(lambda_g)),
            Flexible::Zero => Box::new(ZeroFitter),
        };
        Ok((f, g))
    }
}

/// Out-of-fold predictions of each component, averaged over repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPredictions {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

/// Fits on every training split and predicts each component on the held-out
/// fold. Cells run in parallel and merge in `(repeat, fold)` order.
pub fn cross_validated_predictions(
    data: &Dataset,
    learners: &LearnerPair,
    lambda_f: f64,
    lambda_g: f64,
    cv: &CvConfig,
) -> Result<CvPredictions> {
    let n = data.n();
    cv.validate(n)?;
    let (f_class, g_class) = learners.fitters(data.p(), lambda_f, lambda_g)?;
    let assignments: Vec<Vec<usize>> = (0..cv.repeats).map(|r| cv.assignment(n, r)).collect();
    let cells: Vec<(usize, usize)> = (0..cv.repeats).flat_map(|r| (0..cv.folds).map(move |k| (r, k))).collect();
    let results: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = cells
        .par_iter()
        .map(|&(repeat, fold)| {
            let labels = &assignments[repeat];
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| labels[i] == fold);
            let wrap = |e: DpmError| DpmError::CvFold {
                repeat,
                fold,
                source: Box::new(e),
            };
            let fit = fit_double_penalty(&data.subset(&train), f_class.as_ref(), g_class.as_ref(), learners.stop)
                .map_err(wrap)?;
            let (f, g) = fit.predict_parts(&data.x().select_rows(&test));
            Ok((test, f, g))
        })
        .collect::<Result<_>>()?;
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    for (test, fp, gp) in results {
        for ((i, a), b) in test.into_iter().zip(fp).zip(gp) {
            f[i] += a;
            g[i] += b;
        }
    }
    let scale = 1.0 / cv.repeats as f64;
    f.iter_mut().chain(g.iter_mut()).for_each(|v| *v *= scale);
    Ok(CvPredictions { f, g })
}

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DpmError::Domain(format!("lengths differ: {} vs {}", a.len(), b.len())));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(DpmError::Estimation("correlation undefined for a constant vector".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::fit_linear_ols;
    use crate::numerics::DenseMatrix;

    fn linear_data(n: usize, noise: f64, seed: u64) -> Dataset {
        let mut rng = SeededRng::new(seed);
        let x = DenseMatrix::from_fn(n, 2, |_, _| rng.uniform());
        let y = (0..n).map(|i| 1.0 + 2.0 * x[(i, 0)] - x[(i, 1)] + noise * rng.normal()).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn pearson_hand_values() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        // centred (−1,0,1) and (−4/3,−1/3,5/3): 3/√(2·14/3)
        let expected = 3.0 / (2.0_f64 * 14.0 / 3.0).sqrt();
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - expected).abs() < 1e-12);
        assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(DpmError::Estimation(_))));
    }

    #[test]
    fn folds_partition_each_repeat() {
        let cv = CvConfig {
            folds: 4,
            repeats: 3,
            seed: 5,
        };
        for r in 0..3 {
            let a = cv.assignment(22, r);
            let mut counts = [0; 4];
            a.iter().for_each(|&k| counts[k] += 1);
            assert!(counts.iter().all(|&c| c == 5 || c == 6));
        }
        assert_ne!(cv.assignment(22, 0), cv.assignment(22, 1));
    }

    #[test]
    fn degenerate_pair_is_plain_cv_ols() {
        let d = linear_data(30, 0.3, 1);
        let cv = CvConfig {
            folds: 5,
            repeats: 1,
            seed: 2,
        };
        let pair = LearnerPair::new(Interpretable::Linear, Flexible::Zero);
        let p = cross_validated_predictions(&d, &pair, 0.0, 0.0, &cv).unwrap();
        assert!(p.g.iter().all(|v| *v == 0.0));
        let labels = cv.assignment(30, 0);
        for k in 0..5 {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..30).partition(|&i| labels[i] == k);
            let sub = d.subset(&train);
            let m = fit_linear_ols(&sub, sub.y(), true, None).unwrap();
            for i in test {
                assert!((m.eval(d.x().row(i)) - p.f[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn noiseless_linear_is_recovered() {
        let d = linear_data(40, 0.0, 3);
        let pair = LearnerPair::new(Interpretable::Linear, Flexible::Kernel);
        let p = cross_validated_predictions(&d, &pair, 1e-6, 1.0, &CvConfig::default()).unwrap();
        assert!(pearson(d.y(), &p.f).unwrap() > 0.99);
    }

    #[test]
    fn poisoned_training_response_does_not_leak() {
        let d = linear_data(25, 0.2, 4);
        let cv = CvConfig {
            folds: 5,
            repeats: 1,
            seed: 6,
        };
        let pair = LearnerPair::new(Interpretable::Linear, Flexible::Stumps);
        let base = cross_validated_predictions(&d, &pair, 1e-3, 1e-3, &cv).unwrap();
        let mut y = d.y().to_vec();
        y[7] = 1e6;
        let poisoned = cross_validated_predictions(&d.with_response(y).unwrap(), &pair, 1e-3, 1e-3, &cv).unwrap();
        let labels = cv.assignment(25, 0);
        for i in 0..25 {
            let same_fold = labels[i] == labels[7];
            let unchanged = base.f[i] == poisoned.f[i] && base.g[i] == poisoned.g[i];
            assert_eq!(unchanged, same_fold, "observation {i}");
        }
    }
}
