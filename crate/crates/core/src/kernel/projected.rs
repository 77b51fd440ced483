use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::numerics::{tensor_or_qmc_rule, DenseMatrix, QuadratureRule};

use super::basis::OrthonormalBasis;
use super::matern::MaternSpec;

/// Default quadrature budget: Gauss–Legendre nodes for `p ≤ 2`, Halton points
/// above.
pub fn default_quadrature_budget(p: usize) -> usize {
    if p == 1 {
        64
    } else {
        1024
    }
}

/// Matérn kernel with the linear functions projected out:
/// `Ψ_F(x,y) = Ψ(x,y) − Σ e_k(x)m_k(y) − Σ e_k(y)m_k(x) + Σ e_k(x)e_l(y)M_kl`
/// with `m_k(y) = ∫Ψ(s,y)e_k(s)ds` and `M_kl = ∫∫Ψ(s,t)e_k(s)e_l(t)ds dt`,
/// all integrals taken with the attached rule.
#[derive(Debug, Clone)]
pub struct ProjectedKernel {
    base: MaternSpec,
    basis: OrthonormalBasis,
    rule: QuadratureRule,
    /// `w_i e_k(q_i)` for every node `i`, shape `Q × (p+1)`.
    weighted_basis: DenseMatrix,
    big_m: DenseMatrix,
}

/// Moments `m_k(y)` and basis values `e_k(y)` for a set of points.
#[derive(Debug, Clone)]
pub struct PointMoments {
    pub points: DenseMatrix,
    /// `n × (p+1)`: `m_k(y_i)`.
    pub moments: DenseMatrix,
    /// `n × (p+1)`: `e_k(y_i)`.
    pub basis: DenseMatrix,
}

impl ProjectedKernel {
    pub fn new(base: MaternSpec, rule: QuadratureRule) -> Result<Self> {
        base.validate()?;
        if rule.dim() != base.p {
            return Err(crate::DpmError::Validation(format!(
                "quadrature dimension {} differs from kernel dimension {}",
                rule.dim(),
                base.p
            )));
        }
        let basis = OrthonormalBasis::for_rule(&rule)?;
        let q = rule.len();
        let d = basis.len();
        let mut weighted_basis = DenseMatrix::zeros(q, d);
        for i in 0..q {
            basis.eval_into(&rule.points()[i], weighted_basis.row_mut(i));
            let w = rule.weights()[i];
            weighted_basis.row_mut(i).iter_mut().for_each(|v| *v *= w);
        }
        let nodes = DenseMatrix::from_rows(rule.points())?;
        let kqq = matern_gram(&base, &nodes);
        // M = (W E)ᵀ Kqq (W E)
        let big_m = weighted_basis.transpose().matmul(&kqq.matmul(&weighted_basis)?)?;
        let mut sym = big_m.clone();
        for k in 0..d {
            for l in 0..d {
                sym[(k, l)] = 0.5 * (big_m[(k, l)] + big_m[(l, k)]);
            }
        }
        Ok(Self {
            base,
            basis,
            rule,
            weighted_basis,
            big_m: sym,
        })
    }

    /// Uses the default rule for the kernel's dimension.
    pub fn with_default_rule(base: MaternSpec) -> Result<Self> {
        let rule = tensor_or_qmc_rule(base.p, default_quadrature_budget(base.p))?;
        Self::new(base, rule)
    }

    pub fn base(&self) -> &MaternSpec {
        &self.base
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn moment_matrix(&self) -> &DenseMatrix {
        &self.big_m
    }

    /// `m_k(y)` for each row `y` of `points`.
    pub fn moments(&self, points: &DenseMatrix) -> PointMoments {
        let nodes = self.rule.points();
        let d = self.basis.len();
        let rows: Vec<Vec<f64>> = (0..points.rows())
            .into_par_iter()
            .map(|i| {
                let y = points.row(i);
                let mut m = vec![0.0; d];
                for (j, s) in nodes.iter().enumerate() {
                    let k = self.base.eval(s, y);
                    for (mk, wb) in m.iter_mut().zip(self.weighted_basis.row(j)) {
                        *mk += k * wb;
                    }
                }
                m
            })
            .collect();
        let moments = DenseMatrix::from_fn(points.rows(), d, |i, k| rows[i][k]);
        PointMoments {
            points: points.clone(),
            moments,
            basis: self.basis.eval_rows(points),
        }
    }

    /// `Ψ_F(a_i, b_j)` from precomputed moments.
    pub fn cross_from_moments(&self, a: &PointMoments, b: &PointMoments) -> DenseMatrix {
        let base = matern_cross(&self.base, &a.points, &b.points);
        let d = self.basis.len();
        let em = a.basis.matmul(&self.big_m).expect("basis width matches M");
        DenseMatrix::from_fn(a.points.rows(), b.points.rows(), |i, j| {
            let ea = a.basis.row(i);
            let eb = b.basis.row(j);
            let ma = a.moments.row(i);
            let mb = b.moments.row(j);
            let mut v = base[(i, j)];
            for k in 0..d {
                v -= ea[k] * mb[k] + eb[k] * ma[k];
                v += em[(i, k)] * eb[k];
            }
            v
        })
    }

    /// Symmetric Gram matrix from precomputed moments.
    pub fn gram_from_moments(&self, a: &PointMoments) -> DenseMatrix {
        let mut k = self.cross_from_moments(a, a);
        symmetrize(&mut k);
        k
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let a = self.moments(&DenseMatrix::from_rows(&[x.to_vec()]).expect("one row"));
        let b = self.moments(&DenseMatrix::from_rows(&[y.to_vec()]).expect("one row"));
        self.cross_from_moments(&a, &b)[(0, 0)]
    }
}

fn symmetrize(k: &mut DenseMatrix) {
    let n = k.rows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (k[(i, j)] + k[(j, i)]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
}

/// Base Matérn Gram on the rows of `x`.
pub fn matern_gram(spec: &MaternSpec, x: &DenseMatrix) -> DenseMatrix {
    let n = x.rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..i).map(|j| spec.eval(x.row(i), x.row(j))).collect())
        .collect();
    let mut k = DenseMatrix::identity(n);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            k[(i, j)] = *v;
            k[(j, i)] = *v;
        }
    }
    k
}

/// Base Matérn cross matrix `Ψ(a_i, b_j)`.
pub fn matern_cross(spec: &MaternSpec, a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = (0..a.rows())
        .into_par_iter()
        .map(|i| (0..b.rows()).map(|j| spec.eval(a.row(i), b.row(j))).collect())
        .collect();
    DenseMatrix::from_fn(a.rows(), b.rows(), |i, j| rows[i][j])
}

/// A kernel usable by kernel ridge regression.
#[derive(Debug, Clone)]
pub enum Kernel {
    Matern(MaternSpec),
    Projected(Arc<ProjectedKernel>),
}

impl Kernel {
    pub fn dim(&self) -> usize {
        match self {
            Kernel::Matern(m) => m.p,
            Kernel::Projected(pk) => pk.base().p,
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Matern(m) => m.eval(x, y),
            Kernel::Projected(pk) => pk.eval(x, y),
        }
    }

    pub fn gram(&self, x: &DenseMatrix) -> DenseMatrix {
        match self {
            Kernel::Matern(m) => matern_gram(m, x),
            Kernel::Projected(pk) => pk.gram_from_moments(&pk.moments(x)),
        }
    }

    /// `k(a_i, b_j)`.
    pub fn cross(&self, a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        match self {
            Kernel::Matern(m) => matern_cross(m, a, b),
            Kernel::Projected(pk) => pk.cross_from_moments(&pk.moments(a), &pk.moments(b)),
        }
    }
}

/// Free-function form of [`ProjectedKernel::eval`].
pub fn projected_kernel_eval(pk: &ProjectedKernel, x: &[f64], y: &[f64]) -> f64 {
    pk.eval(x, y)
}
