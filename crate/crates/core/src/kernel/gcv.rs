use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};
use crate::model::Dataset;
use crate::numerics::{Cholesky, DenseMatrix};

use super::projected::Kernel;

/// One grid point of a GCV curve; `score` is `None` when `tr(I − A) ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcvPoint {
    pub lambda: f64,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcvResult {
    pub best_lambda: f64,
    pub curve: Vec<GcvPoint>,
}

/// 20 log-spaced values of `nλ` in `[1e-6, 1e2]`, returned as λ.
pub fn default_gcv_grid(n: usize) -> Vec<f64> {
    let n = n.max(1) as f64;
    (0..20)
        .map(|i| 10f64.powf(-6.0 + 8.0 * i as f64 / 19.0) / n)
        .collect()
}

/// `GCV(λ) = (1/n)‖(I−A)r‖² / ((1/n)tr(I−A))²` with `A = K(K+nλI)^{-1}`.
///
/// Uses `(I−A)r = nλ(K+nλI)^{-1}r` and `tr(I−A) = nλ·tr((K+nλI)^{-1})`.
pub fn gcv_curve(gram: &DenseMatrix, residual: &[f64], grid: &[f64]) -> Result<GcvResult> {
    if grid.is_empty() {
        return Err(DpmError::Validation("GCV grid must be non-empty".into()));
    }
    let n = gram.rows();
    if residual.len() != n {
        return Err(DpmError::Domain("residual length differs from Gram order".into()));
    }
    let nf = n as f64;
    let mut curve = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &lambda in grid {
        if !(lambda > 0.0) {
            return Err(DpmError::Validation(format!("GCV grid values must be positive, got {lambda}")));
        }
        let mut a = gram.clone();
        a.add_diagonal(nf * lambda);
        let score = match Cholesky::factor(&a, 0.0) {
            Ok(chol) => {
                let shift = nf * lambda + chol.jitter_used();
                let u = chol.solve_vec(residual);
                let rss = u.iter().map(|v| (shift * v).powi(2)).sum::<f64>() / nf;
                let tr = shift * chol.inverse_trace() / nf;
                (tr > 0.0 && rss.is_finite()).then(|| rss / (tr * tr))
            }
            Err(e) => {
                log::warn!("GCV skipped λ = {lambda:e}: {e}");
                None
            }
        };
        if let Some(s) = score {
            if best.is_none_or(|(b, _)| s < b) {
                best = Some((s, lambda));
            }
        }
        curve.push(GcvPoint { lambda, score });
    }
    let (_, best_lambda) = best.ok_or_else(|| DpmError::Numerical("no valid GCV grid point".into()))?;
    Ok(GcvResult { best_lambda, curve })
}

/// GCV selection of λ for kernel ridge on `data`.
pub fn gcv_select_lambda(kernel: &Kernel, data: &Dataset, residual: &[f64], grid: &[f64]) -> Result<GcvResult> {
    gcv_curve(&kernel.gram(data.x()), residual, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::MaternSpec;
    use crate::numerics::SeededRng;

    #[test]
    fn singleton_grid() {
        let k = DenseMatrix::identity(3);
        let r = gcv_curve(&k, &[1.0, -1.0, 0.5], &[0.2]).unwrap();
        assert_eq!(r.best_lambda, 0.2);
        assert_eq!(r.curve.len(), 1);
    }

    #[test]
    fn noise_is_not_interpolated() {
        let mut rng = SeededRng::new(21);
        let n = 40;
        let x = DenseMatrix::from_fn(n, 1, |_, _| rng.uniform());
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let d = Dataset::new(x, y.clone()).unwrap();
        let k = Kernel::Matern(MaternSpec::new(2.5, 1, 1.0).unwrap());
        let grid = default_gcv_grid(n);
        let r = gcv_select_lambda(&k, &d, &y, &grid).unwrap();
        assert!(r.best_lambda > grid[0]);
        assert!(r.curve.iter().all(|p| p.score.is_some_and(|s| s > 0.0 && s.is_finite())));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_gcv_grid(50);
        assert_eq!(g.len(), 20);
        assert!((g[0] * 50.0 - 1e-6).abs() < 1e-18);
        assert!((g[19] * 50.0 - 1e2).abs() < 1e-10);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
