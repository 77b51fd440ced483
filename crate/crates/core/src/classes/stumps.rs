use crate::error::{DpmError, Result};
use crate::model::{BoundFitter, Dataset, Descriptor, FunctionClassFitter, Member};

/// Depth-one regression tree: `left` when `x[feature] ≤ threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.threshold == f64::INFINITY || x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

/// Sum of boosted stumps with L₂-shrunk leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct StumpEnsemble {
    stumps: Vec<Stump>,
    pub learning_rate: f64,
    pub lambda: f64,
}

impl StumpEnsemble {
    pub fn stumps(&self) -> &[Stump] {
        &self.stumps
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.eval(x)).sum()
    }

    /// `λ Σ leaf²` over both leaves of every stump.
    pub fn penalty(&self) -> f64 {
        self.lambda
            * self
                .stumps
                .iter()
                .map(|s| s.left * s.left + s.right * s.right)
                .sum::<f64>()
    }
}

/// Greedy least-squares boosting of stumps. Each round fits the current
/// residual with leaves `sum/(count + nλ)` scaled by the learning rate.
#[derive(Debug, Clone)]
pub struct StumpsFitter {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_rounds: usize,
}

impl StumpsFitter {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            learning_rate: 0.3,
            max_rounds: 10,
        }
    }
}

struct BoundStumps {
    spec: StumpsFitter,
    x_cols: Vec<Vec<f64>>,
    /// Per usable feature, observation indices sorted by value.
    order: Vec<(usize, Vec<usize>)>,
}

impl FunctionClassFitter for StumpsFitter {
    fn name(&self) -> String {
        format!("stumps({})", self.lambda)
    }

    fn bind(&self, data: &Dataset) -> Result<Box<dyn BoundFitter>> {
        if self.max_rounds == 0 {
            return Err(DpmError::Validation("boosting needs at least one round".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(DpmError::Validation(format!(
                "learning rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(DpmError::Validation(format!("leaf penalty must be non-negative, got {}", self.lambda)));
        }
        let x_cols: Vec<Vec<f64>> = (0..data.p()).map(|j| data.x().column(j)).collect();
        let order = x_cols
            .iter()
            .enumerate()
            .filter_map(|(j, col)| {
                let mut idx: Vec<usize> = (0..col.len()).collect();
                idx.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                let constant = col[idx[0]] == col[idx[idx.len() - 1]];
                (!constant).then_some((j, idx))
            })
            .collect();
        Ok(Box::new(BoundStumps {
            spec: self.clone(),
            x_cols,
            order,
        }))
    }
}

impl BoundStumps {
    /// Split maximising `Σ_leaves S²/(c + nλ)`; `None` when no feature varies.
    fn best_split(&self, cur: &[f64]) -> Option<(usize, f64, f64, usize, f64, usize)> {
        let n = cur.len();
        let shrink = n as f64 * self.spec.lambda;
        let total: f64 = cur.iter().sum();
        let mut best: Option<(f64, (usize, f64, f64, usize, f64, usize))> = None;
        for (j, idx) in &self.order {
            let col = &self.x_cols[*j];
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += cur[idx[k]];
                let (a, b) = (col[idx[k]], col[idx[k + 1]]);
                if a == b {
                    continue;
                }
                let cl = k + 1;
                let cr = n - cl;
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / (cl as f64 + shrink) + right_sum * right_sum / (cr as f64 + shrink);
                if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                    best = Some((gain, (*j, 0.5 * (a + b), left_sum, cl, right_sum, cr)));
                }
            }
        }
        best.map(|(_, s)| s)
    }
}

impl BoundFitter for BoundStumps {
    fn fit_residual(&mut self, residual: &[f64]) -> Result<Member> {
        let n = residual.len();
        let shrink = n as f64 * self.spec.lambda;
        let lr = self.spec.learning_rate;
        let mut cur = residual.to_vec();
        let mut fitted = vec![0.0; n];
        let mut stumps = Vec::with_capacity(self.spec.max_rounds);
        for _ in 0..self.spec.max_rounds {
            let stump = match self.best_split(&cur) {
                Some((feature, threshold, sl, cl, sr, cr)) => Stump {
                    feature,
                    threshold,
                    left: lr * sl / (cl as f64 + shrink),
                    right: lr * sr / (cr as f64 + shrink),
                },
                None => {
                    // no usable feature: a single leaf holding everything
                    let v = lr * cur.iter().sum::<f64>() / (n as f64 + shrink);
                    Stump {
                        feature: 0,
                        threshold: f64::INFINITY,
                        left: v,
                        right: v,
                    }
                }
            };
            for i in 0..n {
                let v = if stump.threshold == f64::INFINITY || self.x_cols[stump.feature][i] <= stump.threshold {
                    stump.left
                } else {
                    stump.right
                };
                cur[i] -= v;
                fitted[i] += v;
            }
            stumps.push(stump);
        }
        let ensemble = StumpEnsemble {
            stumps,
            learning_rate: lr,
            lambda: self.spec.lambda,
        };
        let penalty = ensemble.penalty();
        Ok(Member::new(Descriptor::StumpEnsemble(ensemble), penalty, fitted))
    }
}

/// One-shot boosted stumps fit of `residual`.
pub fn fit_boosted_stumps(
    data: &Dataset,
    residual: &[f64],
    lambda: f64,
    max_rounds: usize,
    learning_rate: f64,
) -> Result<StumpEnsemble> {
    let spec = StumpsFitter {
        lambda,
        learning_rate,
        max_rounds,
    };
    let member = spec.bind(data)?.fit_residual(residual)?;
    match member.descriptor() {
        Descriptor::StumpEnsemble(e) => Ok(e.clone()),
        _ => unreachable!("stumps fitter returns stump ensembles"),
    }
}
