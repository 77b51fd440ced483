use crate::error::{DpmError, Result};
use crate::numerics::{Cholesky, DenseMatrix};

/// Pivot ratio below which a normal-equation matrix counts as rank deficient.
const RANK_TOL: f64 = 1e-13;

/// Least squares on a fixed design through the normal equations.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    design: DenseMatrix,
    gram: DenseMatrix,
    chol: Cholesky,
}

impl LeastSquares {
    pub fn new(design: DenseMatrix) -> Result<Self> {
        if design.cols() == 0 {
            return Err(DpmError::Domain("least squares needs at least one column".into()));
        }
        let gram = design.gram();
        let chol = Cholesky::factor(&gram, 0.0)?;
        let max_diag = (0..gram.rows()).fold(0.0_f64, |m, i| m.max(gram[(i, i)]));
        let pivot = chol.min_pivot();
        if pivot * pivot < RANK_TOL * max_diag {
            return Err(DpmError::Numerical(format!(
                "design with {} columns is rank deficient (pivot² {:e} vs scale {:e})",
                design.cols(),
                pivot * pivot,
                max_diag
            )));
        }
        Ok(Self { design, gram, chol })
    }

    pub fn design(&self) -> &DenseMatrix {
        &self.design
    }

    /// `(AᵀA)^{-1} Aᵀ r` with one step of iterative refinement.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.design.t_matvec(r)?;
        let mut coef = self.chol.solve_vec(&rhs);
        let ax = self.gram.matvec(&coef)?;
        let resid: Vec<f64> = ax.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let corr = self.chol.solve_vec(&resid);
        coef.iter_mut().zip(corr).for_each(|(c, d)| *c -= d);
        Ok(coef)
    }

    pub fn fitted(&self, coef: &[f64]) -> Result<Vec<f64>> {
        self.design.matvec(coef)
    }
}
