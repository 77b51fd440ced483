use std::fmt;
use std::sync::Arc;

use crate::error::{DpmError, Result};
use crate::model::{BoundFitter, Dataset, Descriptor, FunctionClassFitter, Member};
use crate::numerics::{tensor_or_qmc_rule, DenseMatrix, QuadratureRule};

use super::lsq::LeastSquares;

type BasisFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A named function on the unit cube.
#[derive(Clone)]
pub struct BasisFunction {
    name: String,
    f: Arc<BasisFn>,
}

impl BasisFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Same function multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self::new(format!("{c}*{}", self.name), move |x| c * f(x))
    }

    /// `n × d` matrix of evaluations at the rows of `x`.
    pub fn evaluate_all(basis: &[BasisFunction], x: &DenseMatrix) -> DenseMatrix {
        DenseMatrix::from_fn(x.rows(), basis.len(), |i, k| basis[k].eval(x.row(i)))
    }
}

impl fmt::Debug for BasisFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasisFunction({})", self.name)
    }
}

/// `f = Σ α_k φ_k`.
#[derive(Debug, Clone)]
pub struct FiniteBasisModel {
    basis: Arc<Vec<BasisFunction>>,
    alpha: Vec<f64>,
    pub l2_bound: Option<f64>,
    pub projected: bool,
}

impl FiniteBasisModel {
    pub fn new(basis: Arc<Vec<BasisFunction>>, alpha: Vec<f64>) -> Result<Self> {
        if basis.len() != alpha.len() {
            return Err(DpmError::Domain(format!(
                "{} coefficients for {} basis functions",
                alpha.len(),
                basis.len()
            )));
        }
        Ok(Self {
            basis,
            alpha,
            l2_bound: None,
            projected: false,
        })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.basis.iter().zip(&self.alpha).map(|(b, a)| a * b.eval(x)).sum()
    }
}

/// Least squares over the span of a fixed basis, with an optional bound on
/// the quadrature L₂ norm of the fitted function.
#[derive(Debug, Clone)]
pub struct FiniteBasisFitter {
    basis: Arc<Vec<BasisFunction>>,
    pub l2_bound: Option<f64>,
    pub quadrature_budget: usize,
}

impl FiniteBasisFitter {
    pub fn new(basis: Vec<BasisFunction>) -> Self {
        Self {
            basis: Arc::new(basis),
            l2_bound: None,
            quadrature_budget: 64,
        }
    }

    pub fn with_l2_bound(mut self, r: f64) -> Self {
        self.l2_bound = Some(r);
        self
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    /// Least-squares coefficients for `residual`.
    pub fn fit(&self, data: &Dataset, residual: &[f64]) -> Result<FiniteBasisModel> {
        let member = self.bind(data)?.fit_residual(residual)?;
        match member.descriptor() {
            Descriptor::FiniteBasis(m) => Ok(m.clone()),
            _ => unreachable!("basis fitter returns basis members"),
        }
    }
}

struct BoundBasis {
    basis: Arc<Vec<BasisFunction>>,
    lsq: LeastSquares,
    bound: Option<(f64, DenseMatrix)>,
}

impl FunctionClassFitter for FiniteBasisFitter {
    fn name(&self) -> String {
        let names: Vec<&str> = self.basis.iter().map(|b| b.name()).collect();
        format!("basis{{{}}}", names.join(","))
    }

    fn bind(&self, data: &Dataset) -> Result<Box<dyn BoundFitter>> {
        if self.basis.is_empty() {
            return Err(DpmError::Validation("basis must contain at least one function".into()));
        }
        let lsq = LeastSquares::new(BasisFunction::evaluate_all(&self.basis, data.x()))?;
        let bound = match self.l2_bound {
            Some(r) if r > 0.0 => {
                let rule = tensor_or_qmc_rule(data.p(), self.quadrature_budget)?;
                Some((r, quadrature_gram(&self.basis, &rule)))
            }
            Some(r) => return Err(DpmError::Validation(format!("L2 bound must be positive, got {r}"))),
            None => None,
        };
        Ok(Box::new(BoundBasis {
            basis: self.basis.clone(),
            lsq,
            bound,
        }))
    }
}

/// `G_kl = ∫ φ_k φ_l` under `rule`.
pub(crate) fn quadrature_gram(basis: &[BasisFunction], rule: &QuadratureRule) -> DenseMatrix {
    let vals = DenseMatrix::from_fn(rule.len(), basis.len(), |i, k| basis[k].eval(&rule.points()[i]));
    let d = basis.len();
    let mut g = DenseMatrix::zeros(d, d);
    for (i, w) in rule.weights().iter().enumerate() {
        let row = vals.row(i);
        for k in 0..d {
            for l in 0..=k {
                g[(k, l)] += w * row[k] * row[l];
            }
        }
    }
    for k in 0..d {
        for l in 0..k {
            g[(l, k)] = g[(k, l)];
        }
    }
    g
}

impl BoundFitter for BoundBasis {
    fn fit_residual(&mut self, residual: &[f64]) -> Result<Member> {
        let mut alpha = self.lsq.solve(residual)?;
        let mut projected = false;
        if let Some((r, gram)) = &self.bound {
            let norm = gram
                .matvec(&alpha)?
                .iter()
                .zip(&alpha)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .max(0.0)
                .sqrt();
            if norm > *r {
                let s = r / norm;
                alpha.iter_mut().for_each(|a| *a *= s);
                projected = true;
                log::info!("basis L2 bound {r} active (unconstrained norm {norm:.6})");
            }
        }
        let fitted = self.lsq.fitted(&alpha)?;
        let mut model = FiniteBasisModel::new(self.basis.clone(), alpha)?;
        model.l2_bound = self.bound.as_ref().map(|b| b.0);
        model.projected = projected;
        Ok(Member::new(Descriptor::FiniteBasis(model), 0.0, fitted))
    }
}
