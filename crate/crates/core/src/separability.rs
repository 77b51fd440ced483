//! How distinguishable two function classes are: the largest cosine between
//! a member of one span and a member of the other.

use serde::{Deserialize, Serialize};

use crate::classes::BasisFunction;
use crate::error::{DpmError, Result};
use crate::numerics::{sym_eig_small, Cholesky, DenseMatrix, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparabilityMethod {
    AnalyticPsi,
    L2Quadrature,
    EmpiricalCanonical,
}

/// Coefficients of the pair `(f*, g*)` attaining the extremal cosine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub f_coefficients: Vec<f64>,
    pub g_coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub theta_estimate: f64,
    pub method: SeparabilityMethod,
    pub certificate: Option<Certificate>,
}

/// Largest cosine between `x` and `sin(θx)` on `[0,1]`:
/// `2√(3θ)|sin θ − θcos θ| / (θ²√(2θ − sin 2θ))`.
pub fn psi(theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(DpmError::Domain(format!("ψ needs θ > 0, got {theta}")));
    }
    let num = 2.0 * (3.0 * theta).sqrt() * (theta.sin() - theta * theta.cos()).abs();
    let den = theta * theta * (2.0 * theta - (2.0 * theta).sin()).sqrt();
    Ok(num / den)
}

pub fn analytic_report(theta: f64) -> Result<SeparabilityReport> {
    Ok(SeparabilityReport {
        theta_estimate: psi(theta)?,
        method: SeparabilityMethod::AnalyticPsi,
        certificate: None,
    })
}

/// Pivot ratio below which a Gram matrix counts as rank deficient.
const RANK_TOL: f64 = 1e-10;
const GRAM_JITTER: f64 = 1e-12;

fn unit_diagonal_scaling(gram: &DenseMatrix, label: &str) -> Result<Vec<f64>> {
    (0..gram.rows())
        .map(|i| {
            let d = gram[(i, i)];
            if d > 0.0 && d.is_finite() {
                Ok(1.0 / d.sqrt())
            } else {
                Err(DpmError::Numerical(format!("{label} basis has a vanishing function")))
            }
        })
        .collect()
}

fn whitener(gram: &DenseMatrix, label: &str) -> Result<Cholesky> {
    let scale = (0..gram.rows()).fold(0.0_f64, |m, i| m.max(gram[(i, i)]));
    if !(scale > 0.0) {
        return Err(DpmError::Numerical(format!("{label} basis vanishes identically")));
    }
    let chol = Cholesky::factor(gram, GRAM_JITTER * scale)?;
    let pivot = chol.min_pivot();
    if pivot * pivot < RANK_TOL * scale {
        return Err(DpmError::Numerical(format!(
            "{label} basis is rank deficient (pivot² {:e} vs scale {scale:e})",
            pivot * pivot
        )));
    }
    Ok(chol)
}

/// Top canonical correlation from Gram blocks `G_F`, `G_G` and cross-Gram `C`.
pub fn canonical_correlation(
    g_f: &DenseMatrix,
    g_g: &DenseMatrix,
    cross: &DenseMatrix,
    method: SeparabilityMethod,
) -> Result<SeparabilityReport> {
    let d1 = g_f.rows();
    let d2 = g_g.rows();
    if cross.rows() != d1 || cross.cols() != d2 {
        return Err(DpmError::Domain("cross-Gram shape does not match the bases".into()));
    }
    // Unit-diagonal equilibration; the correlation is invariant to it.
    let sf = unit_diagonal_scaling(g_f, "first")?;
    let sg = unit_diagonal_scaling(g_g, "second")?;
    let g_f = DenseMatrix::from_fn(d1, d1, |i, j| sf[i] * g_f[(i, j)] * sf[j]);
    let g_g = DenseMatrix::from_fn(d2, d2, |i, j| sg[i] * g_g[(i, j)] * sg[j]);
    let cross = DenseMatrix::from_fn(d1, d2, |i, j| sf[i] * cross[(i, j)] * sg[j]);
    let lf = whitener(&g_f, "first")?;
    let lg = whitener(&g_g, "second")?;
    // W = L_F^{-1} C L_G^{-T}
    let mut tmp = DenseMatrix::zeros(d1, d2);
    for j in 0..d2 {
        let mut col = cross.column(j);
        lf.forward(&mut col);
        for i in 0..d1 {
            tmp[(i, j)] = col[i];
        }
    }
    let mut w = DenseMatrix::zeros(d1, d2);
    for i in 0..d1 {
        let mut row = tmp.row(i).to_vec();
        lg.forward(&mut row);
        w.row_mut(i).copy_from_slice(&row);
    }
    let d = d1 + d2;
    let mut block = DenseMatrix::zeros(d, d);
    for i in 0..d1 {
        for j in 0..d2 {
            block[(i, d1 + j)] = w[(i, j)];
            block[(d1 + j, i)] = w[(i, j)];
        }
    }
    let eig = sym_eig_small(&block)?;
    let sigma = eig.values[0].max(0.0);
    let v = eig.vectors.column(0);
    let mut a = v[..d1].to_vec();
    let mut b = v[d1..].to_vec();
    lf.backward(&mut a);
    lg.backward(&mut b);
    a.iter_mut().zip(&sf).for_each(|(v, s)| *v *= s);
    b.iter_mut().zip(&sg).for_each(|(v, s)| *v *= s);
    Ok(SeparabilityReport {
        theta_estimate: sigma,
        method,
        certificate: Some(Certificate {
            f_coefficients: a,
            g_coefficients: b,
        }),
    })
}

/// Canonical correlation of two spans under the quadrature inner product.
pub fn theta_l2_quadrature(
    basis_f: &[BasisFunction],
    basis_g: &[BasisFunction],
    rule: &QuadratureRule,
) -> Result<SeparabilityReport> {
    if basis_f.is_empty() || basis_g.is_empty() {
        return Err(DpmError::Validation("both bases need at least one function".into()));
    }
    let q = rule.len();
    let vf = DenseMatrix::from_fn(q, basis_f.len(), |i, k| basis_f[k].eval(&rule.points()[i]));
    let vg = DenseMatrix::from_fn(q, basis_g.len(), |i, k| basis_g[k].eval(&rule.points()[i]));
    let sw: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
    let scale = |v: &DenseMatrix| DenseMatrix::from_fn(v.rows(), v.cols(), |i, k| sw[i] * v[(i, k)]);
    let (vf, vg) = (scale(&vf), scale(&vg));
    canonical_correlation(
        &vf.gram(),
        &vg.gram(),
        &vf.transpose().matmul(&vg)?,
        SeparabilityMethod::L2Quadrature,
    )
}

/// Canonical correlation of two spans under the empirical inner product,
/// from `n × d₁` and `n × d₂` evaluation matrices.
pub fn empirical_theta(values_f: &DenseMatrix, values_g: &DenseMatrix) -> Result<SeparabilityReport> {
    if values_f.rows() != values_g.rows() {
        return Err(DpmError::Domain("evaluation matrices need the same number of rows".into()));
    }
    if values_f.rows() == 0 || values_f.cols() == 0 || values_g.cols() == 0 {
        return Err(DpmError::Validation("evaluation matrices must be non-empty".into()));
    }
    let n = values_f.rows() as f64;
    let mut gf = values_f.gram();
    let mut gg = values_g.gram();
    let mut c = values_f.transpose().matmul(values_g)?;
    gf.scale(1.0 / n);
    gg.scale(1.0 / n);
    c.scale(1.0 / n);
    canonical_correlation(&gf, &gg, &c, SeparabilityMethod::EmpiricalCanonical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{gauss_legendre_01, SeededRng};
    use proptest::prelude::*;

    fn sin_basis(theta: f64) -> Vec<BasisFunction> {
        vec![BasisFunction::new("sin", move |x| (theta * x[0]).sin())]
    }

    fn x_basis() -> Vec<BasisFunction> {
        vec![BasisFunction::new("x", |x| x[0])]
    }

    #[test]
    fn psi_values() {
        assert!((psi(2.0).unwrap() - 0.978).abs() < 1e-3);
        assert!((psi(4.0).unwrap() - 0.304).abs() < 1e-3);
        assert!((psi(3.5).unwrap() - 0.615).abs() < 1e-3);
        assert!(psi(0.0).is_err());
    }

    #[test]
    fn quadrature_matches_psi() {
        let rule = gauss_legendre_01(64).unwrap();
        let r = theta_l2_quadrature(&x_basis(), &sin_basis(3.0), &rule).unwrap();
        assert!((r.theta_estimate - psi(3.0).unwrap()).abs() < 1e-10);
        assert!((r.theta_estimate - 0.828).abs() < 0.005);
    }

    #[test]
    fn identical_bases_are_fully_correlated() {
        let rule = gauss_legendre_01(16).unwrap();
        let r = theta_l2_quadrature(&x_basis(), &x_basis(), &rule).unwrap();
        assert!((r.theta_estimate - 1.0).abs() < 1e-10);
        let mut rng = SeededRng::new(1);
        let v = DenseMatrix::from_fn(30, 2, |_, _| rng.normal());
        assert!((empirical_theta(&v, &v).unwrap().theta_estimate - 1.0).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_functions() {
        let rule = gauss_legendre_01(16).unwrap();
        let one = vec![BasisFunction::new("1", |_| 1.0)];
        let centered = vec![BasisFunction::new("x-1/2", |x| x[0] - 0.5)];
        assert!(theta_l2_quadrature(&one, &centered, &rule).unwrap().theta_estimate < 1e-6);
        // explicit Gram–Schmidt on a sample
        let mut rng = SeededRng::new(2);
        let a: Vec<f64> = (0..40).map(|_| rng.normal()).collect();
        let b0: Vec<f64> = (0..40).map(|_| rng.normal()).collect();
        let c = a.iter().zip(&b0).map(|(x, y)| x * y).sum::<f64>() / a.iter().map(|x| x * x).sum::<f64>();
        let b: Vec<f64> = b0.iter().zip(&a).map(|(y, x)| y - c * x).collect();
        let r = empirical_theta(&DenseMatrix::column_vector(&a), &DenseMatrix::column_vector(&b)).unwrap();
        assert!(r.theta_estimate < 1e-10);
    }

    #[test]
    fn rank_deficiency_is_numerical() {
        let v = DenseMatrix::from_fn(10, 2, |i, _| i as f64);
        let w = DenseMatrix::from_fn(10, 1, |i, _| (i as f64).sin());
        assert!(matches!(empirical_theta(&v, &w), Err(DpmError::Numerical(_))));
    }

    #[test]
    fn large_sample_approaches_psi() {
        let mut rng = SeededRng::new(3);
        let x: Vec<f64> = (0..2000).map(|_| rng.uniform()).collect();
        let vf = DenseMatrix::column_vector(&x);
        let vg = DenseMatrix::from_fn(2000, 1, |i, _| (3.0 * x[i]).sin());
        let r = empirical_theta(&vf, &vg).unwrap();
        assert!((r.theta_estimate - psi(3.0).unwrap()).abs() < 0.02);
    }

    fn random_eval(n: usize, d: usize, rng: &mut SeededRng) -> DenseMatrix {
        DenseMatrix::from_fn(n, d, |_, _| rng.normal())
    }

    proptest! {
        #[test]
        fn scale_invariance(seed in 0u64..500, c in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64]) {
            let mut rng = SeededRng::new(seed);
            let f = random_eval(25, 2, &mut rng);
            let g = random_eval(25, 3, &mut rng);
            let mut gs = g.clone();
            for i in 0..25 {
                gs[(i, 1)] *= c;
            }
            let a = empirical_theta(&f, &g).unwrap().theta_estimate;
            let b = empirical_theta(&f, &gs).unwrap().theta_estimate;
            prop_assert!((a - b).abs() < 1e-10);
            prop_assert!(a <= 1.0 + 1e-10);
        }

        #[test]
        fn certificate_attains_estimate(seed in 0u64..500) {
            let mut rng = SeededRng::new(seed);
            let f = random_eval(30, 2, &mut rng);
            let g = random_eval(30, 2, &mut rng);
            let r = empirical_theta(&f, &g).unwrap();
            let cert = r.certificate.unwrap();
            let fv = f.matvec(&cert.f_coefficients).unwrap();
            let gv = g.matvec(&cert.g_coefficients).unwrap();
            let ip = crate::model::empirical_inner(&fv, &gv).unwrap();
            let cos = ip.abs() / (crate::model::empirical_norm(&fv) * crate::model::empirical_norm(&gv));
            prop_assert!((cos - r.theta_estimate).abs() < 1e-8);
        }

        #[test]
        fn nested_bases_are_monotone(seed in 0u64..500) {
            let mut rng = SeededRng::new(seed);
            let f = random_eval(30, 2, &mut rng);
            let g = random_eval(30, 3, &mut rng);
            let g_small = DenseMatrix::from_fn(30, 2, |i, k| g[(i, k)]);
            let big = empirical_theta(&f, &g).unwrap().theta_estimate;
            let small = empirical_theta(&f, &g_small).unwrap().theta_estimate;
            prop_assert!(big >= small - 1e-12);
        }
    }
}
