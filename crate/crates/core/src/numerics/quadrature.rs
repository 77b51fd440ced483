//! Quadrature on the unit cube: Gauss–Legendre (tensorised up to two
//! dimensions) and equal-weight Halton rules above that.

use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};

/// Nodes and weights for the uniform measure on `[0,1]^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    dim: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(DpmError::Domain(
                "quadrature needs one weight per point and at least one point".into(),
            ));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(DpmError::Domain(format!("quadrature points must have dimension {dim}")));
        }
        if points
            .iter()
            .flatten()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(DpmError::Domain("quadrature points must lie in the unit cube".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(DpmError::Domain("quadrature weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DpmError::Domain(format!("quadrature weights sum to {total}, not 1")));
        }
        Ok(Self { dim, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Gauss–Legendre rule with `n` nodes on `[0,1]`.
pub fn gauss_legendre_01(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(DpmError::Domain("Gauss–Legendre needs at least one node".into()));
    }
    let (nodes, weights) = gauss_legendre_nodes(n);
    let mut pts: Vec<(f64, f64)> = nodes
        .into_iter()
        .zip(weights)
        .map(|(t, w)| (0.5 * (t + 1.0), 0.5 * w))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // renormalise the last few ulps so the weights sum to one exactly enough
    let total: f64 = pts.iter().map(|p| p.1).sum();
    QuadratureRule::new(
        1,
        pts.iter().map(|p| vec![p.0]).collect(),
        pts.iter().map(|p| p.1 / total).collect(),
    )
}

/// Nodes and weights on `[-1,1]` by Newton iteration on `P_n`.
fn gauss_legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Tensor Gauss–Legendre for `p ≤ 2` (with `budget` nodes for `p = 1` and
/// `⌊√budget⌋` per axis for `p = 2`), otherwise the first `budget` Halton
/// points with equal weights.
pub fn tensor_or_qmc_rule(p: usize, budget: usize) -> Result<QuadratureRule> {
    if p == 0 {
        return Err(DpmError::Domain("dimension must be at least 1".into()));
    }
    if budget == 0 {
        return Err(DpmError::Domain("quadrature budget must be positive".into()));
    }
    match p {
        1 => gauss_legendre_01(budget),
        2 => {
            let m = (budget as f64).sqrt().floor().max(1.0) as usize;
            let base = gauss_legendre_01(m)?;
            let mut points = Vec::with_capacity(m * m);
            let mut weights = Vec::with_capacity(m * m);
            for (a, wa) in base.points().iter().zip(base.weights()) {
                for (b, wb) in base.points().iter().zip(base.weights()) {
                    points.push(vec![a[0], b[0]]);
                    weights.push(wa * wb);
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            QuadratureRule::new(2, points, weights)
        }
        _ => {
            let points = (1..=budget as u64)
                .map(|i| halton(i, p))
                .collect::<Result<Vec<_>>>()?;
            let w = 1.0 / budget as f64;
            QuadratureRule::new(p, points, vec![w; budget])
        }
    }
}

/// The first twenty primes, used as Halton bases.
pub const HALTON_PRIMES: [u64; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Point `index` (1-based) of the `dims`-dimensional Halton sequence.
pub fn halton(index: u64, dims: usize) -> Result<Vec<f64>> {
    if dims > HALTON_PRIMES.len() {
        return Err(DpmError::Domain(format!(
            "Halton supports at most {} dimensions",
            HALTON_PRIMES.len()
        )));
    }
    if index == 0 {
        return Err(DpmError::Domain("Halton indices start at 1".into()));
    }
    Ok(HALTON_PRIMES[..dims]
        .iter()
        .map(|&b| radical_inverse(index, b))
        .collect())
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    out
}

/// `count` points starting at Halton index 1.
pub fn halton_points(count: usize, dims: usize) -> Result<Vec<Vec<f64>>> {
    (1..=count as u64).map(|i| halton(i, dims)).collect()
}
