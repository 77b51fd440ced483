//! Small dense linear algebra: row-major matrices, jittered Cholesky solves and
//! a cyclic Jacobi eigensolver for symmetric matrices.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{DpmError, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(DpmError::Domain(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(DpmError::Domain("ragged rows".into()));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Single-column matrix.
    pub fn column_vector(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(DpmError::Domain(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(DpmError::Domain(format!(
                "cannot multiply {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `selfᵀ v`.
    pub fn t_matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.rows != v.len() {
            return Err(DpmError::Domain(format!(
                "cannot multiply transpose of {}x{} by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                for b in a..self.cols {
                    g.data[a * self.cols + b] += r[a] * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g.data[a * self.cols + b] = g.data[b * self.cols + a];
            }
        }
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_diagonal(&mut self, s: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] += s;
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Symmetric to within `tol · max|A|`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let bound = tol * self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= bound))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative symmetry tolerance for matrices marked symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

const MAX_JITTER_ESCALATIONS: usize = 3;

/// Lower-triangular Cholesky factor of `A + jitter_used · I`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
    jitter_used: f64,
}

impl Cholesky {
    /// Factors `A + jitter · I`, escalating the jitter up to three times (×10
    /// each) when a pivot is not positive. A zero starting jitter escalates
    /// from `1e-14 · max(1, max diag)`.
    pub fn factor(a: &DenseMatrix, jitter: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(DpmError::Domain("Cholesky needs a square matrix".into()));
        }
        if !a.is_symmetric(SYMMETRY_TOL) {
            return Err(DpmError::Domain("Cholesky needs a symmetric matrix".into()));
        }
        if jitter < 0.0 || !jitter.is_finite() {
            return Err(DpmError::Domain(format!("invalid jitter {jitter}")));
        }
        let scale = (0..a.rows()).fold(1.0_f64, |m, i| m.max(a[(i, i)].abs()));
        let mut j = jitter;
        let mut last_pivot = (0, 0.0);
        for attempt in 0..=MAX_JITTER_ESCALATIONS {
            if attempt > 0 {
                j = if j == 0.0 { 1e-14 * scale } else { j * 10.0 };
            }
            match factor_once(a, j) {
                Ok(l) => return Ok(Self { l, jitter_used: j }),
                Err(p) => last_pivot = p,
            }
        }
        Err(DpmError::Numerical(format!(
            "matrix of order {} not positive definite after jitter escalation to {j:e} \
             (pivot {} = {:e})",
            a.rows(),
            last_pivot.0,
            last_pivot.1
        )))
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    pub fn factor_matrix(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn order(&self) -> usize {
        self.l.rows()
    }

    /// Smallest diagonal entry of the factor.
    pub fn min_pivot(&self) -> f64 {
        (0..self.order()).fold(f64::INFINITY, |m, i| m.min(self.l[(i, i)]))
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.order();
        for i in 0..n {
            let row = self.l.row(i);
            let s: f64 = row[..i].iter().zip(&b[..i]).map(|(l, y)| l * y).sum();
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward(&self, y: &mut [f64]) {
        let n = self.order();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }

    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Trace of `(A + jitter I)^{-1}`.
    pub fn inverse_trace(&self) -> f64 {
        // tr(A^{-1}) = ‖L^{-1}‖_F²
        let n = self.order();
        let mut total = 0.0;
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.forward(&mut e);
            total += e.iter().map(|v| v * v).sum::<f64>();
        }
        total
    }
}

fn factor_once(a: &DenseMatrix, jitter: f64) -> std::result::Result<DenseMatrix, (usize, f64)> {
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)] + jitter;
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err((j, d));
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Result of [`cholesky_solve`].
#[derive(Debug, Clone)]
pub struct CholeskySolution {
    pub x: DenseMatrix,
    pub jitter_used: f64,
}

/// Solves `(A + jitter_used · I) X = B` with iterative refinement; the
/// returned residual satisfies `‖(A + jI)X − B‖_∞ ≤ 1e-8 ‖B‖_∞` or the
/// jitter is escalated further.
pub fn cholesky_solve(a: &DenseMatrix, b: &DenseMatrix, jitter: f64) -> Result<CholeskySolution> {
    if a.rows() != b.rows() {
        return Err(DpmError::Domain(format!(
            "right-hand side has {} rows, system has order {}",
            b.rows(),
            a.rows()
        )));
    }
    let mut j = jitter;
    let b_norm = b.max_abs();
    for _ in 0..=MAX_JITTER_ESCALATIONS {
        let chol = Cholesky::factor(a, j)?;
        let used = chol.jitter_used();
        let mut x = chol.solve(b);
        let mut resid = shifted_residual(a, used, &x, b);
        for _ in 0..2 {
            if resid.max_abs() <= 1e-8 * b_norm {
                break;
            }
            let corr = chol.solve(&resid);
            for (xv, c) in x.data.iter_mut().zip(&corr.data) {
                *xv -= c;
            }
            resid = shifted_residual(a, used, &x, b);
        }
        if resid.max_abs() <= 1e-8 * b_norm {
            return Ok(CholeskySolution { x, jitter_used: used });
        }
        let scale = (0..a.rows()).fold(1.0_f64, |m, i| m.max(a[(i, i)].abs()));
        j = (used * 10.0).max(1e-14 * scale);
    }
    Err(DpmError::Numerical(format!(
        "Cholesky solve residual above 1e-8·‖B‖ even with jitter {j:e}"
    )))
}

/// `(A + jI) X − B`.
fn shifted_residual(a: &DenseMatrix, j: f64, x: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut r = a.matmul(x).expect("shapes checked by caller");
    for i in 0..r.rows() {
        for c in 0..r.cols() {
            r[(i, c)] += j * x[(i, c)] - b[(i, c)];
        }
    }
    r
}

/// Symmetric eigendecomposition.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DenseMatrix,
}

/// Largest supported order for [`sym_eig_small`].
pub const MAX_EIG_ORDER: usize = 200;

/// Cyclic Jacobi eigensolver for symmetric matrices of order ≤ 200.
pub fn sym_eig_small(a: &DenseMatrix) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(DpmError::Domain("eigensolver needs a square matrix".into()));
    }
    if a.rows() > MAX_EIG_ORDER {
        return Err(DpmError::Domain(format!(
            "order {} exceeds the supported {MAX_EIG_ORDER}",
            a.rows()
        )));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(DpmError::Domain("eigensolver needs a symmetric matrix".into()));
    }
    let n = a.rows();
    let mut m = a.clone();
    // symmetrise exactly so rotations stay consistent
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}
