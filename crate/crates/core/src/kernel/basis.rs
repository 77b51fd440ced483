use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};
use crate::numerics::{Cholesky, DenseMatrix, QuadratureRule};

/// Orthonormal basis `e_0, …, e_p` of the linear functions on `[0,1]^p`.
///
/// The closed form is `e_0 = 1`, `e_j = √12 (x_j − ½)`. When bound to a
/// quadrature rule that does not integrate these exactly (Halton rules), the
/// basis is re-orthonormalised by Gram–Schmidt under that rule, so that
/// orthogonality holds exactly for every integral computed with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    p: usize,
    /// `e_k = Σ_l c_kl ẽ_l` where `ẽ` is the closed form; lower triangular.
    coeffs: DenseMatrix,
    /// `max |G − I|` of the closed form under the bound rule.
    pub closed_form_gram_error: f64,
}

const SQRT_12: f64 = 3.464_101_615_137_754_6;

fn closed_form(x: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    for (o, v) in out[1..].iter_mut().zip(x) {
        *o = SQRT_12 * (v - 0.5);
    }
}

impl OrthonormalBasis {
    /// The closed-form basis, exact under the uniform measure.
    pub fn closed_form(p: usize) -> Self {
        Self {
            p,
            coeffs: DenseMatrix::identity(p + 1),
            closed_form_gram_error: 0.0,
        }
    }

    /// The basis orthonormalised under `rule`.
    pub fn for_rule(rule: &QuadratureRule) -> Result<Self> {
        let p = rule.dim();
        let d = p + 1;
        let mut g = DenseMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for (x, w) in rule.points().iter().zip(rule.weights()) {
            closed_form(x, &mut e);
            for k in 0..d {
                for l in 0..d {
                    g[(k, l)] += w * e[k] * e[l];
                }
            }
        }
        for k in 0..d {
            for l in 0..k {
                let avg = 0.5 * (g[(k, l)] + g[(l, k)]);
                g[(k, l)] = avg;
                g[(l, k)] = avg;
            }
        }
        let mut err = 0.0_f64;
        for k in 0..d {
            for l in 0..d {
                let target = if k == l { 1.0 } else { 0.0 };
                err = err.max((g[(k, l)] - target).abs());
            }
        }
        let chol = Cholesky::factor(&g, 0.0)?;
        if chol.jitter_used() > 0.0 {
            return Err(DpmError::Numerical(
                "quadrature rule cannot separate the linear functions".into(),
            ));
        }
        // rows of L^{-1} give the Gram–Schmidt coefficients
        let mut coeffs = DenseMatrix::zeros(d, d);
        for j in 0..d {
            let mut col = vec![0.0; d];
            col[j] = 1.0;
            chol.forward(&mut col);
            for k in 0..d {
                coeffs[(k, j)] = col[k];
            }
        }
        if err > 1e-12 {
            log::debug!("re-orthonormalised linear basis under rule (closed-form Gram error {err:e})");
        }
        Ok(Self {
            p,
            coeffs,
            closed_form_gram_error: err,
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Number of basis functions, `p + 1`.
    pub fn len(&self) -> usize {
        self.p + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Writes `(e_0(x), …, e_p(x))` into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.len();
        let mut raw = vec![0.0; d];
        closed_form(x, &mut raw);
        for k in 0..d {
            let row = self.coeffs.row(k);
            out[k] = row[..=k].iter().zip(&raw[..=k]).map(|(c, v)| c * v).sum();
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// `n × (p+1)` evaluations at the rows of `x`.
    pub fn eval_rows(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(x.rows(), self.len());
        for i in 0..x.rows() {
            self.eval_into(x.row(i), out.row_mut(i));
        }
        out
    }
}

/// Closed-form orthonormal linear basis on `[0,1]^p`.
pub fn orthonormal_linear_basis(p: usize) -> OrthonormalBasis {
    OrthonormalBasis::closed_form(p)
}
