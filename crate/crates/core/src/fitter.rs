//! The alternating double penalty solver and its convergence instrumentation.

use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};
use crate::model::{
    empirical_distance, objective, partial_objective, AdditiveFit, BoundFitter, Dataset, FunctionClassFitter,
    IterationRecord, Member, StopReason,
};

/// When to stop alternating. A criterion set to zero only fires on an exact
/// zero (change) or is disabled (objective, reference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_iters: usize,
    /// Stop when `|obj_m − obj_{m−1}| ≤ objective_tol` (disabled at 0).
    pub objective_tol: f64,
    /// Stop when `‖f_m − f_{m−1}‖_n + ‖g_m − g_{m−1}‖_n ≤ change_tol`.
    pub change_tol: f64,
    /// Stop when the distance to a supplied reference solution is
    /// `≤ reference_tol` (disabled at 0 or without a reference).
    pub reference_tol: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            max_iters: 500,
            objective_tol: 0.0,
            change_tol: 1e-6,
            reference_tol: 0.0,
        }
    }
}

impl StoppingRule {
    pub fn max_iters(n: usize) -> Self {
        Self {
            max_iters: n,
            objective_tol: 0.0,
            change_tol: 0.0,
            reference_tol: 0.0,
        }
    }

    pub fn with_change_tol(mut self, tol: f64) -> Self {
        self.change_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(DpmError::Validation("max_iters must be at least 1".into()));
        }
        for (name, v) in [
            ("objective_tol", self.objective_tol),
            ("change_tol", self.change_tol),
            ("reference_tol", self.reference_tol),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(DpmError::Validation(format!("{name} must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }
}

/// Options beyond the stopping rule.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub stop: StoppingRule,
    /// `(f̂, ĝ)` at the training points; enables reference distances.
    pub reference: Option<(Vec<f64>, Vec<f64>)>,
    /// Initialise `g` from `y` and alternate `f, g` instead of `g, f`.
    pub g_first: bool,
    /// Keep every `(f_m, g_m)`.
    pub record_snapshots: bool,
    /// Reject a block update whose partial objective is worse than the
    /// incumbent's (only inexact fitters can produce one).
    pub descent_safeguard: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            stop: StoppingRule::default(),
            reference: None,
            g_first: false,
            record_snapshots: false,
            descent_safeguard: true,
        }
    }
}

impl FitOptions {
    pub fn with_stop(stop: StoppingRule) -> Self {
        Self {
            stop,
            ..Self::default()
        }
    }
}

/// Relative slack before the descent safeguard rejects a candidate; keeps
/// rounding noise from freezing an exact solver.
const SAFEGUARD_SLACK: f64 = 1e-12;

fn residual_of(y: &[f64], h: &[f64]) -> Vec<f64> {
    y.iter().zip(h).map(|(a, b)| a - b).collect()
}

fn block_update(fitter: &mut dyn BoundFitter, residual: &[f64], incumbent: &Member, safeguard: bool) -> Result<Member> {
    let candidate = fitter.fit_residual(residual)?;
    if safeguard {
        let new = partial_objective(residual, candidate.fitted(), candidate.penalty());
        let old = partial_objective(residual, incumbent.fitted(), incumbent.penalty());
        if new > old + SAFEGUARD_SLACK * (1.0 + old.abs()) {
            log::debug!("descent safeguard kept the incumbent ({new:e} > {old:e})");
            return Ok(incumbent.clone());
        }
    }
    Ok(candidate)
}

/// Fits `y ≈ f + g` by cyclic partial-residual minimisation with the default
/// options and the given stopping rule.
pub fn fit_double_penalty(
    data: &Dataset,
    fitter_f: &dyn FunctionClassFitter,
    fitter_g: &dyn FunctionClassFitter,
    stop: StoppingRule,
) -> Result<AdditiveFit> {
    fit_double_penalty_with(data, fitter_f, fitter_g, &FitOptions::with_stop(stop))
}

/// Fits `y ≈ f + g` by cyclic partial-residual minimisation.
///
/// `f_0 = argmin_f ‖y − f‖_n² + L_f(f)` and `g_0 = 0`; then for `m = 1, 2, …`
/// `g_m` is fitted to `y − f_{m−1}` and `f_m` to `y − g_m`. With
/// `g_first` the roles are exchanged.
pub fn fit_double_penalty_with(
    data: &Dataset,
    fitter_f: &dyn FunctionClassFitter,
    fitter_g: &dyn FunctionClassFitter,
    options: &FitOptions,
) -> Result<AdditiveFit> {
    options.stop.validate()?;
    let n = data.n();
    if let Some((fr, gr)) = &options.reference {
        if fr.len() != n || gr.len() != n {
            return Err(DpmError::Validation("reference solution must have one value per observation".into()));
        }
    }
    let mut bf = fitter_f.bind(data)?;
    let mut bg = fitter_g.bind(data)?;
    let y = data.y();
    let abort = |iteration: usize, trace: &[IterationRecord], e: DpmError| DpmError::FitAborted {
        iteration,
        trace: trace.to_vec(),
        source: Box::new(e),
    };

    // "first" is the block initialised on y and refitted second in each pass
    let (first, second): (&mut Box<dyn BoundFitter>, &mut Box<dyn BoundFitter>) = if options.g_first {
        (&mut bg, &mut bf)
    } else {
        (&mut bf, &mut bg)
    };
    let mut a = first.fit_residual(y).map_err(|e| abort(0, &[], e))?;
    let mut b = Member::zero(n);
    let parts = |a: &Member, b: &Member| -> (Member, Member) {
        if options.g_first {
            (b.clone(), a.clone())
        } else {
            (a.clone(), b.clone())
        }
    };
    let eval_objective = |a: &Member, b: &Member| -> Result<f64> {
        let (f, g) = if options.g_first { (b, a) } else { (a, b) };
        objective(data, f.fitted(), g.fitted(), f.penalty(), g.penalty())
    };
    let initial_objective = eval_objective(&a, &b)?;
    let mut prev_objective = initial_objective;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut snapshots = Vec::new();
    let stop = options.stop;

    for m in 1..=stop.max_iters {
        let r_b = residual_of(y, a.fitted());
        let new_b = block_update(second.as_mut(), &r_b, &b, options.descent_safeguard)
            .map_err(|e| abort(m, &trace, e))?;
        let r_a = residual_of(y, new_b.fitted());
        let new_a = block_update(first.as_mut(), &r_a, &a, options.descent_safeguard)
            .map_err(|e| abort(m, &trace, e))?;
        let a_change = empirical_distance(new_a.fitted(), a.fitted());
        let b_change = empirical_distance(new_b.fitted(), b.fitted());
        a = new_a;
        b = new_b;
        let (f, g) = parts(&a, &b);
        let obj = eval_objective(&a, &b)?;
        let reference_distance = options.reference.as_ref().map(|(fr, gr)| {
            empirical_distance(f.fitted(), fr) + empirical_distance(g.fitted(), gr)
        });
        let (f_change, g_change) = if options.g_first { (b_change, a_change) } else { (a_change, b_change) };
        trace.push(IterationRecord {
            iteration: m,
            objective: obj,
            f_change,
            g_change,
            f_penalty: f.penalty(),
            g_penalty: g.penalty(),
            reference_distance,
        });
        if options.record_snapshots {
            snapshots.push((f, g));
        }

        let reason = if stop.reference_tol > 0.0 && reference_distance.is_some_and(|d| d <= stop.reference_tol) {
            Some(StopReason::ReferenceTol)
        } else if f_change + g_change <= stop.change_tol {
            Some(StopReason::ChangeTol)
        } else if stop.objective_tol > 0.0 && (prev_objective - obj).abs() <= stop.objective_tol {
            Some(StopReason::ObjectiveTol)
        } else if m == stop.max_iters {
            Some(StopReason::MaxIters)
        } else {
            None
        };
        prev_objective = obj;
        if let Some(stop_reason) = reason {
            let (f_hat, g_hat) = parts(&a, &b);
            return Ok(AdditiveFit {
                f_hat,
                g_hat,
                initial_objective,
                trace,
                stop_reason,
                snapshots,
            });
        }
    }
    unreachable!("the loop returns at max_iters")
}

/// Least-squares line through `log(error_m)` against `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub iters_used: usize,
}

/// Regresses `log(errors[m−1])` on the 1-based iteration `m`, using only
/// `m > burn_in` with `errors ≥ floor`.
pub fn estimate_convergence_slope(errors: &[f64], burn_in: usize, floor: f64) -> Result<SlopeEstimate> {
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .map(|(k, e)| (k + 1, *e))
        .filter(|(m, e)| *m > burn_in && *e >= floor && e.is_finite() && *e > 0.0)
        .map(|(m, e)| (m as f64, e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(DpmError::Estimation(format!(
            "{} usable iterations after burn-in {burn_in} and floor {floor:e}; need at least 3",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(SlopeEstimate {
        slope,
        intercept: my - slope * mx,
        iters_used: pts.len(),
    })
}

/// Exponent of the rate in a convergence bound `d_m ≤ rate^{e(m)}·d_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateExponent {
    /// Separable classes: `e(m) = 2m − 6`, checked for `m ≥ 3`.
    Separable,
    /// A strongly convex penalty: `e(m) = m − 1`, checked for `m ≥ 1`.
    StronglyConvex,
}

impl RateExponent {
    fn first_checked(self) -> usize {
        match self {
            RateExponent::Separable => 3,
            RateExponent::StronglyConvex => 1,
        }
    }

    fn exponent(self, m: usize) -> f64 {
        match self {
            RateExponent::Separable => 2.0 * m as f64 - 6.0,
            RateExponent::StronglyConvex => m as f64 - 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateViolation {
    pub iteration: usize,
    pub distance: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub passed: bool,
    pub checked: usize,
    pub first_violation: Option<RateViolation>,
}

/// Checks `d_m ≤ rate^{e(m)}·d_1·(1 + tol)` along a trace with reference
/// distances.
pub fn verify_rate_bound(trace: &[IterationRecord], rate: f64, rule: RateExponent, tol: f64) -> Result<RateReport> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(DpmError::Validation(format!("rate must lie in (0, 1), got {rate}")));
    }
    let d: Vec<f64> = trace
        .iter()
        .map(|r| r.reference_distance)
        .collect::<Option<_>>()
        .ok_or_else(|| DpmError::Precondition("trace has no reference distances".into()))?;
    let Some(&d1) = d.first() else {
        return Err(DpmError::Precondition("trace is empty".into()));
    };
    let mut checked = 0;
    for (k, &dm) in d.iter().enumerate() {
        let m = k + 1;
        if m < rule.first_checked() {
            continue;
        }
        checked += 1;
        let bound = rate.powf(rule.exponent(m)) * d1 * (1.0 + tol);
        if dm > bound {
            return Ok(RateReport {
                passed: false,
                checked,
                first_violation: Some(RateViolation {
                    iteration: m,
                    distance: dm,
                    bound,
                }),
            });
        }
    }
    Ok(RateReport {
        passed: true,
        checked,
        first_violation: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{BasisFunction, FiniteBasisFitter, LinearFitter};
    use crate::model::ZeroFitter;
    use crate::numerics::{DenseMatrix, SeededRng};

    fn sine_linear_data(n: usize, seed: u64) -> Dataset {
        let mut rng = SeededRng::new(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let y = x.iter().map(|v| v + 3.0 * (3.0 * v).sin() + 0.3 * rng.normal()).collect();
        Dataset::new(DenseMatrix::column_vector(&x), y).unwrap()
    }

    fn classes() -> (FiniteBasisFitter, FiniteBasisFitter) {
        (
            FiniteBasisFitter::new(vec![BasisFunction::new("x", |x| x[0])]),
            FiniteBasisFitter::new(vec![BasisFunction::new("sin(3x)", |x| (3.0 * x[0]).sin())]),
        )
    }

    #[test]
    fn zero_flexible_class_is_a_single_fit() {
        let d = sine_linear_data(30, 1);
        let lin = LinearFitter::new(true);
        let fit = fit_double_penalty(&d, &lin, &ZeroFitter, StoppingRule::default()).unwrap();
        assert_eq!(fit.iterations(), 1);
        assert_eq!(fit.stop_reason, StopReason::ChangeTol);
        let direct = lin.bind(&d).unwrap().fit_residual(d.y()).unwrap();
        assert_eq!(fit.f_hat.fitted(), direct.fitted());
    }

    #[test]
    fn converges_to_joint_least_squares() {
        let d = sine_linear_data(50, 2);
        let (f, g) = classes();
        let stop = StoppingRule {
            max_iters: 10_000,
            change_tol: 1e-12,
            ..StoppingRule::default()
        };
        let fit = fit_double_penalty(&d, &f, &g, stop).unwrap();
        let joint = FiniteBasisFitter::new(vec![f.basis()[0].clone(), g.basis()[0].clone()])
            .fit(&d, d.y())
            .unwrap();
        for i in 0..50 {
            let x = d.x().row(i);
            assert!((fit.f_hat.fitted()[i] - joint.alpha()[0] * x[0]).abs() < 1e-6);
            assert!((fit.g_hat.fitted()[i] - joint.alpha()[1] * (3.0 * x[0]).sin()).abs() < 1e-6);
        }
    }

    #[test]
    fn objective_is_monotone_and_order_invariant() {
        let d = sine_linear_data(40, 3);
        let (f, g) = classes();
        let stop = StoppingRule {
            max_iters: 10_000,
            change_tol: 1e-12,
            ..StoppingRule::default()
        };
        let fit = fit_double_penalty(&d, &f, &g, stop).unwrap();
        let mut prev = fit.initial_objective;
        for r in &fit.trace {
            assert!(r.objective <= prev + 1e-10);
            prev = r.objective;
        }
        let swapped = fit_double_penalty_with(
            &d,
            &f,
            &g,
            &FitOptions {
                stop,
                g_first: true,
                ..FitOptions::default()
            },
        )
        .unwrap();
        assert!((fit.final_objective() - swapped.final_objective()).abs() <= 1e-8);
    }

    #[test]
    fn slope_of_exact_geometric_sequence() {
        let rho: f64 = 0.7;
        let e: Vec<f64> = (1..=30).map(|m| 2.0 * rho.powi(m)).collect();
        let s = estimate_convergence_slope(&e, 3, 1e-10).unwrap();
        assert!((s.slope - rho.ln()).abs() < 1e-10);
        assert_eq!(s.iters_used, 27);
    }

    #[test]
    fn slope_with_jitter() {
        let rho: f64 = 0.8;
        let mut rng = SeededRng::new(4);
        let e: Vec<f64> = (1..=60)
            .map(|m| rho.powi(m) * (1.0 + 0.01 * (2.0 * rng.uniform() - 1.0)))
            .collect();
        let s = estimate_convergence_slope(&e, 3, 1e-10).unwrap();
        assert!((s.slope - rho.ln()).abs() < 0.01);
    }

    #[test]
    fn slope_needs_three_points() {
        assert!(matches!(
            estimate_convergence_slope(&[1e-12; 10], 3, 1e-10),
            Err(DpmError::Estimation(_))
        ));
    }

    fn geometric_trace(rate: f64, rule: RateExponent, len: usize) -> Vec<IterationRecord> {
        (1..=len)
            .map(|m| IterationRecord {
                iteration: m,
                objective: 0.0,
                f_change: 0.0,
                g_change: 0.0,
                f_penalty: 0.0,
                g_penalty: 0.0,
                reference_distance: Some(if m < 3 && rule == RateExponent::Separable {
                    1.0
                } else {
                    rate.powf(rule.exponent(m))
                }),
            })
            .collect()
    }

    #[test]
    fn rate_bound_checks() {
        let t = geometric_trace(0.5, RateExponent::StronglyConvex, 20);
        assert!(verify_rate_bound(&t, 0.5, RateExponent::StronglyConvex, 1e-12).unwrap().passed);
        assert!(verify_rate_bound(&t, 0.999, RateExponent::StronglyConvex, 0.0).unwrap().passed);
        let r = verify_rate_bound(&t, 0.4, RateExponent::StronglyConvex, 0.0).unwrap();
        assert_eq!(r.first_violation.unwrap().iteration, 2);
        let t = geometric_trace(0.5, RateExponent::Separable, 20);
        assert!(verify_rate_bound(&t, 0.5, RateExponent::Separable, 1e-12).unwrap().passed);
        let mut missing = t.clone();
        missing[4].reference_distance = None;
        assert!(matches!(
            verify_rate_bound(&missing, 0.5, RateExponent::Separable, 0.0),
            Err(DpmError::Precondition(_))
        ));
    }
}
