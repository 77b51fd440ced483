//! Datasets, empirical geometry, the residual-fitting contract and the record
//! produced by the alternating fitter.

use serde::{Deserialize, Serialize};

use crate::classes::{FiniteBasisModel, LinearModel, StumpEnsemble};
use crate::error::{DpmError, Result};
use crate::kernel::KernelRidgeModel;
use crate::numerics::DenseMatrix;

/// Observations on the unit cube. Inputs given on a rectangle are mapped
/// affinely onto `[0,1]^p`; `omega` keeps the original bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: DenseMatrix,
    y: Vec<f64>,
    omega: Vec<(f64, f64)>,
    feature_names: Vec<String>,
    response_name: String,
}

const DOMAIN_SLACK: f64 = 1e-12;

impl Dataset {
    /// Data already on `[0,1]^p`.
    pub fn new(x: DenseMatrix, y: Vec<f64>) -> Result<Self> {
        let p = x.cols();
        Self::from_domain(x, y, vec![(0.0, 1.0); p])
    }

    /// Data on the rectangle `omega`, rescaled to the unit cube.
    pub fn from_domain(x: DenseMatrix, y: Vec<f64>, omega: Vec<(f64, f64)>) -> Result<Self> {
        let n = x.rows();
        let p = x.cols();
        if n == 0 {
            return Err(DpmError::Validation("dataset needs at least one observation".into()));
        }
        if y.len() != n {
            return Err(DpmError::Validation(format!(
                "design has {n} rows but response has {} values",
                y.len()
            )));
        }
        if omega.len() != p {
            return Err(DpmError::Validation(format!(
                "domain has {} bounds for {p} features",
                omega.len()
            )));
        }
        if let Some(j) = omega.iter().position(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(DpmError::Validation(format!("domain bound {j} is empty or non-finite")));
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(DpmError::Validation("dataset contains non-finite values".into()));
        }
        let mut unit = x;
        for i in 0..n {
            for (j, &(lo, hi)) in omega.iter().enumerate() {
                let v = unit[(i, j)];
                let width = hi - lo;
                if v < lo - DOMAIN_SLACK * width || v > hi + DOMAIN_SLACK * width {
                    return Err(DpmError::Validation(format!(
                        "observation {} feature {j} = {v} lies outside [{lo}, {hi}]",
                        i + 1
                    )));
                }
                unit[(i, j)] = ((v - lo) / width).clamp(0.0, 1.0);
            }
        }
        Ok(Self {
            x: unit,
            y,
            omega,
            feature_names: (1..=p).map(|j| format!("x{j}")).collect(),
            response_name: "y".into(),
        })
    }

    pub fn with_names(mut self, features: Vec<String>, response: String) -> Result<Self> {
        if features.len() != self.p() {
            return Err(DpmError::Validation("one name per feature is required".into()));
        }
        self.feature_names = features;
        self.response_name = response;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Design on the unit cube.
    pub fn x(&self) -> &DenseMatrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn omega(&self) -> &[(f64, f64)] {
        &self.omega
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn response_name(&self) -> &str {
        &self.response_name
    }

    /// Maps a point of `omega` to the unit cube.
    pub fn to_unit(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(&self.omega)
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    /// Maps a unit-cube point back to `omega`.
    pub fn from_unit(&self, point: &[f64]) -> Vec<f64> {
        point
            .iter()
            .zip(&self.omega)
            .map(|(u, (lo, hi))| lo + u * (hi - lo))
            .collect()
    }

    /// Rows `idx` as a new dataset sharing `omega` and names.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            omega: self.omega.clone(),
            feature_names: self.feature_names.clone(),
            response_name: self.response_name.clone(),
        }
    }

    /// Same design with a different response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(DpmError::Validation("response length must equal n".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(DpmError::Validation("response contains non-finite values".into()));
        }
        Ok(Self { y, ..self.clone() })
    }
}

/// `(1/n) Σ a_i b_i`.
pub fn empirical_inner(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DpmError::Domain(format!(
            "inner product of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(DpmError::Domain("inner product of empty vectors".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64)
}

/// `‖a‖_n`; zero for an empty vector.
pub fn empirical_norm(a: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64).sqrt()
}

/// `‖a − b‖_n` for equal-length vectors.
pub fn empirical_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64).sqrt()
}

/// `‖r − h‖_n² + penalty`.
pub fn partial_objective(residual: &[f64], fitted: &[f64], penalty: f64) -> f64 {
    let d = empirical_distance(residual, fitted);
    d * d + penalty
}

/// `(1/n) Σ (y_i − f_i − g_i)² + L_f + L_g`.
pub fn objective(data: &Dataset, f_vals: &[f64], g_vals: &[f64], lf: f64, lg: f64) -> Result<f64> {
    let n = data.n();
    if f_vals.len() != n || g_vals.len() != n {
        return Err(DpmError::Domain("fitted values must have one entry per observation".into()));
    }
    let rss: f64 = data
        .y()
        .iter()
        .zip(f_vals.iter().zip(g_vals))
        .map(|(y, (f, g))| (y - f - g).powi(2))
        .sum();
    Ok(rss / n as f64 + lf + lg)
}

/// The fitted function carried by a [`Member`].
#[derive(Debug, Clone)]
pub enum Descriptor {
    Zero,
    Linear(LinearModel),
    FiniteBasis(FiniteBasisModel),
    KernelExpansion(KernelRidgeModel),
    StumpEnsemble(StumpEnsemble),
}

impl Descriptor {
    pub fn kind(&self) -> &'static str {
        match self {
            Descriptor::Zero => "zero",
            Descriptor::Linear(_) => "linear",
            Descriptor::FiniteBasis(_) => "finite-basis",
            Descriptor::KernelExpansion(_) => "kernel-expansion",
            Descriptor::StumpEnsemble(_) => "stump-ensemble",
        }
    }
}

/// A fitted function from one class with its penalty value and its values at
/// the training points it was fitted on.
#[derive(Debug, Clone)]
pub struct Member {
    descriptor: Descriptor,
    penalty: f64,
    fitted: Vec<f64>,
}

impl Member {
    pub fn new(descriptor: Descriptor, penalty: f64, fitted: Vec<f64>) -> Self {
        debug_assert!(penalty >= 0.0, "penalties are non-negative");
        Self {
            descriptor,
            penalty: penalty.max(0.0),
            fitted,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(Descriptor::Zero, 0.0, vec![0.0; n])
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    /// Values at the training points.
    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    /// Value at a unit-cube point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.descriptor {
            Descriptor::Zero => 0.0,
            Descriptor::Linear(m) => m.eval(x),
            Descriptor::FiniteBasis(m) => m.eval(x),
            Descriptor::KernelExpansion(m) => m.eval(x),
            Descriptor::StumpEnsemble(m) => m.eval(x),
        }
    }

    /// Values at every row of `x` (unit-cube coordinates).
    pub fn predict(&self, x: &DenseMatrix) -> Vec<f64> {
        match &self.descriptor {
            Descriptor::KernelExpansion(m) => m.predict(x),
            _ => (0..x.rows()).map(|i| self.eval(x.row(i))).collect(),
        }
    }

    pub fn summary(&self) -> MemberSummary {
        let coefficients = match &self.descriptor {
            Descriptor::Zero => Vec::new(),
            Descriptor::Linear(m) => m.coefficients(),
            Descriptor::FiniteBasis(m) => m.alpha().to_vec(),
            Descriptor::KernelExpansion(m) => m.alpha().to_vec(),
            Descriptor::StumpEnsemble(m) => m
                .stumps()
                .iter()
                .flat_map(|s| [s.feature as f64, s.threshold, s.left, s.right])
                .collect(),
        };
        MemberSummary {
            kind: self.descriptor.kind().to_string(),
            penalty: self.penalty,
            coefficients,
        }
    }
}

/// Serializable digest of a [`Member`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub kind: String,
    pub penalty: f64,
    /// Linear: slopes then intercept. Basis and kernel: coefficients.
    /// Stumps: `(feature, threshold, left, right)` per round.
    pub coefficients: Vec<f64>,
}

/// A function class that can solve the penalized residual problem
/// `argmin_h ‖r − h‖_n² + L(h)`.
pub trait FunctionClassFitter: Send + Sync {
    fn name(&self) -> String;

    /// Precomputes whatever depends only on the design.
    fn bind(&self, data: &Dataset) -> Result<Box<dyn BoundFitter>>;
}

/// A fitter bound to one design; solves residual problems on it.
pub trait BoundFitter: Send {
    /// Returned member satisfies `‖r − h‖_n² + L(h) ≤ ‖r‖_n² + L(0)`.
    fn fit_residual(&mut self, residual: &[f64]) -> Result<Member>;
}

/// The class `{0}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroFitter;

struct BoundZero(usize);

impl FunctionClassFitter for ZeroFitter {
    fn name(&self) -> String {
        "zero".into()
    }

    fn bind(&self, data: &Dataset) -> Result<Box<dyn BoundFitter>> {
        Ok(Box::new(BoundZero(data.n())))
    }
}

impl BoundFitter for BoundZero {
    fn fit_residual(&mut self, _residual: &[f64]) -> Result<Member> {
        Ok(Member::zero(self.0))
    }
}

/// One pass of the alternating fitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    /// `‖f_m − f_{m−1}‖_n`.
    pub f_change: f64,
    /// `‖g_m − g_{m−1}‖_n`.
    pub g_change: f64,
    pub f_penalty: f64,
    pub g_penalty: f64,
    /// `‖f_m − f̂‖_n + ‖g_m − ĝ‖_n` when a reference solution is supplied.
    pub reference_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIters,
    ObjectiveTol,
    ChangeTol,
    ReferenceTol,
}

/// Output of the alternating fitter.
#[derive(Debug, Clone)]
pub struct AdditiveFit {
    pub f_hat: Member,
    pub g_hat: Member,
    /// Objective after the initial `f_0` fit with `g_0 = 0`.
    pub initial_objective: f64,
    pub trace: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// `(f_m, g_m)` for every iteration, when requested.
    pub snapshots: Vec<(Member, Member)>,
}

impl AdditiveFit {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(self.initial_objective, |r| r.objective)
    }

    /// Fitted values of `f̂ + ĝ` at the training points.
    pub fn fitted(&self) -> Vec<f64> {
        self.f_hat
            .fitted()
            .iter()
            .zip(self.g_hat.fitted())
            .map(|(f, g)| f + g)
            .collect()
    }

    /// `(f̂(x), ĝ(x))` at every row of `x`.
    pub fn predict_parts(&self, x: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
        (self.f_hat.predict(x), self.g_hat.predict(x))
    }

    pub fn reference_distances(&self) -> Option<Vec<f64>> {
        self.trace.iter().map(|r| r.reference_distance).collect()
    }
}
