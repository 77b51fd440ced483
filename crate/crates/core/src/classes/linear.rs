use crate::error::{DpmError, Result};
use crate::model::{BoundFitter, Dataset, Descriptor, FunctionClassFitter, Member};
use crate::numerics::DenseMatrix;

use super::lsq::LeastSquares;

/// Coordinates in which a linear norm bound is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundFrame {
    /// Coefficients on the unit cube.
    #[default]
    Unit,
    /// Coefficients on the original domain `omega`.
    Original,
}

/// `f(x) = xᵀβ + c` on unit-cube coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub beta: Vec<f64>,
    /// Zero when the class has no intercept.
    pub intercept: f64,
    pub has_intercept: bool,
    pub norm_bound: Option<f64>,
    /// The unconstrained solution violated the bound and was rescaled.
    pub projected: bool,
    /// False when an iterative solver stopped at its sweep limit.
    pub converged: bool,
}

impl LinearModel {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.intercept + self.beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Slopes followed by the intercept when present.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = self.beta.clone();
        if self.has_intercept {
            c.push(self.intercept);
        }
        c
    }

    /// Slopes and intercept expressed on the original domain `omega`.
    pub fn original_scale(&self, omega: &[(f64, f64)]) -> (Vec<f64>, f64) {
        let mut intercept = self.intercept;
        let slopes = self
            .beta
            .iter()
            .zip(omega)
            .map(|(b, (lo, hi))| {
                let s = b / (hi - lo);
                intercept -= s * lo;
                s
            })
            .collect();
        (slopes, intercept)
    }
}

/// Linear least squares, optionally with intercept, norm bound and a ridge
/// penalty `ridge·‖f‖_n²` (strongly convex in the empirical norm with
/// parameter `2·ridge`).
#[derive(Debug, Clone)]
pub struct LinearFitter {
    pub intercept: bool,
    pub norm_bound: Option<f64>,
    pub bound_frame: BoundFrame,
    pub ridge: f64,
}

impl Default for LinearFitter {
    fn default() -> Self {
        Self {
            intercept: true,
            norm_bound: None,
            bound_frame: BoundFrame::Unit,
            ridge: 0.0,
        }
    }
}

impl LinearFitter {
    pub fn new(intercept: bool) -> Self {
        Self {
            intercept,
            ..Self::default()
        }
    }

    pub fn with_norm_bound(mut self, r: f64, frame: BoundFrame) -> Self {
        self.norm_bound = Some(r);
        self.bound_frame = frame;
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }

    fn validate(&self) -> Result<()> {
        if let Some(r) = self.norm_bound {
            if !(r > 0.0) {
                return Err(DpmError::Validation(format!("norm bound must be positive, got {r}")));
            }
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(DpmError::Validation(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        Ok(())
    }
}

pub(crate) fn linear_design(x: &DenseMatrix, intercept: bool) -> DenseMatrix {
    let p = x.cols();
    let q = p + usize::from(intercept);
    DenseMatrix::from_fn(x.rows(), q, |i, j| if j < p { x[(i, j)] } else { 1.0 })
}

struct BoundLinear {
    spec: LinearFitter,
    lsq: LeastSquares,
    omega: Vec<(f64, f64)>,
}

impl FunctionClassFitter for LinearFitter {
    fn name(&self) -> String {
        if self.ridge > 0.0 {
            format!("linear-ridge({})", self.ridge)
        } else {
            "linear".into()
        }
    }

    fn bind(&self, data: &Dataset) -> Result<Box<dyn BoundFitter>> {
        self.validate()?;
        let lsq = LeastSquares::new(linear_design(data.x(), self.intercept))?;
        Ok(Box::new(BoundLinear {
            spec: self.clone(),
            lsq,
            omega: data.omega().to_vec(),
        }))
    }
}

impl BoundFitter for BoundLinear {
    fn fit_residual(&mut self, residual: &[f64]) -> Result<Member> {
        let mut coef = self.lsq.solve(residual)?;
        // ridge on ‖f‖_n² shrinks the least-squares fit uniformly
        if self.spec.ridge > 0.0 {
            let s = 1.0 / (1.0 + self.spec.ridge);
            coef.iter_mut().for_each(|c| *c *= s);
        }
        let p = self.omega.len();
        let mut model = LinearModel {
            beta: coef[..p].to_vec(),
            intercept: if self.spec.intercept { coef[p] } else { 0.0 },
            has_intercept: self.spec.intercept,
            norm_bound: self.spec.norm_bound,
            projected: false,
            converged: true,
        };
        project_to_ball(&mut model, self.spec.bound_frame, &self.omega);
        let fitted = self.lsq.fitted(&model.coefficients())?;
        let norm = crate::model::empirical_norm(&fitted);
        let penalty = self.spec.ridge * norm * norm;
        Ok(Member::new(Descriptor::Linear(model), penalty, fitted))
    }
}

/// Rescales `(β, c)` onto the norm ball when the bound is violated.
fn project_to_ball(model: &mut LinearModel, frame: BoundFrame, omega: &[(f64, f64)]) {
    let Some(r) = model.norm_bound else { return };
    let norm = match frame {
        BoundFrame::Unit => l2(&model.coefficients()),
        BoundFrame::Original => {
            let (mut s, c) = model.original_scale(omega);
            if model.has_intercept {
                s.push(c);
            }
            l2(&s)
        }
    };
    if norm > r {
        let s = r / norm;
        model.beta.iter_mut().for_each(|b| *b *= s);
        model.intercept *= s;
        model.projected = true;
        log::info!("linear norm bound {r} active (unconstrained norm {norm:.6})");
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Least-squares linear fit of `residual` on `data`.
pub fn fit_linear_ols(
    data: &Dataset,
    residual: &[f64],
    intercept: bool,
    norm_bound: Option<f64>,
) -> Result<LinearModel> {
    let mut spec = LinearFitter::new(intercept);
    spec.norm_bound = norm_bound;
    let member = spec.bind(data)?.fit_residual(residual)?;
    match member.descriptor() {
        Descriptor::Linear(m) => Ok(m.clone()),
        _ => unreachable!("linear fitter returns linear members"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = SeededRng::new(seed);
        let x = DenseMatrix::from_fn(n, p, |_, _| rng.uniform());
        let y = (0..n).map(|_| rng.normal()).collect();
        Dataset::new(x, y).unwrap()
    }

    #[test]
    fn recovers_exact_linear_residual() {
        let d = random_data(30, 3, 1);
        let beta0 = [1.5, -2.0, 0.25];
        let r: Vec<f64> = (0..30).map(|i| 0.7 + d.x().row(i).iter().zip(&beta0).map(|(a, b)| a * b).sum::<f64>()).collect();
        let m = fit_linear_ols(&d, &r, true, None).unwrap();
        for (a, b) in m.beta.iter().zip(&beta0) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((m.intercept - 0.7).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_residual_gives_zero() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        let d = Dataset::new(x, vec![0.0; 4]).unwrap();
        let m = fit_linear_ols(&d, &[0.0, 1.0, 0.0, -1.0], false, None).unwrap();
        assert!(m.beta[0].abs() < 1e-10);
    }

    #[test]
    fn hand_normal_equations() {
        let x = DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let d = Dataset::new(x, vec![0.0, 2.0]).unwrap();
        let m = fit_linear_ols(&d, &[0.0, 2.0], false, None).unwrap();
        assert!((m.beta[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_design_is_numerical_error() {
        let x = DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.2, 0.2], vec![0.9, 0.9]]).unwrap();
        let d = Dataset::new(x, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(fit_linear_ols(&d, d.y(), false, None), Err(DpmError::Numerical(_))));
    }

    #[test]
    fn ball_projection_rescales() {
        let x = DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let d = Dataset::new(x, vec![0.0, 10.0]).unwrap();
        let m = fit_linear_ols(&d, &[0.0, 10.0], false, Some(2.0)).unwrap();
        assert!(m.projected);
        assert!((m.beta[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ball_projection_distance_bound() {
        // ‖Xβ − Xβ_proj‖_n ≤ ‖X‖_op‖β − β_proj‖₂ with ‖X‖_op in the empirical scaling
        let d = random_data(40, 2, 5);
        let r: Vec<f64> = (0..40).map(|i| 5.0 * d.x()[(i, 0)] - 3.0 * d.x()[(i, 1)] + 1.0).collect();
        let free = fit_linear_ols(&d, &r, true, None).unwrap();
        let proj = fit_linear_ols(&d, &r, true, Some(1.0)).unwrap();
        assert!(proj.projected);
        let a = linear_design(d.x(), true);
        let diff: Vec<f64> = free.coefficients().iter().zip(proj.coefficients()).map(|(u, v)| u - v).collect();
        let gap = crate::model::empirical_norm(&a.matvec(&diff).unwrap());
        let mut g = a.gram();
        g.scale(1.0 / 40.0);
        let op = crate::numerics::sym_eig_small(&g).unwrap().values[0].sqrt();
        assert!(gap <= op * l2(&diff) * (1.0 + 1e-12));
    }

    #[test]
    fn original_frame_bound() {
        let x = DenseMatrix::from_rows(&[vec![0.5], vec![2.5], vec![1.5]]).unwrap();
        let d = Dataset::from_domain(x, vec![0.0; 3], vec![(0.5, 2.5)]).unwrap();
        let spec = LinearFitter::new(true).with_norm_bound(10.0, BoundFrame::Original);
        // y = 20x − 5 on the original scale violates β₁² + β₂² ≤ 100
        let r = vec![5.0, 45.0, 25.0];
        let m = spec.bind(&d).unwrap().fit_residual(&r).unwrap();
        let Descriptor::Linear(lm) = m.descriptor() else { panic!() };
        let (s, c) = lm.original_scale(d.omega());
        assert!(lm.projected);
        assert!(((s[0] * s[0] + c * c).sqrt() - 10.0).abs() < 1e-10);
    }
}
