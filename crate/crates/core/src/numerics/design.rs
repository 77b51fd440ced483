//! Latin hypercube designs, optionally optimised for the maximin criterion.

use super::linalg::DenseMatrix;
use super::rng::SeededRng;

/// Random Latin hypercube: column `j` places one point uniformly inside each
/// of the `n` bins `[k/n, (k+1)/n)`.
pub fn random_lhs(n: usize, p: usize, rng: &mut SeededRng) -> DenseMatrix {
    let mut design = DenseMatrix::zeros(n, p);
    for j in 0..p {
        let perm = rng.permutation(n);
        for (i, bin) in perm.into_iter().enumerate() {
            design[(i, j)] = (bin as f64 + rng.uniform()) / n as f64;
        }
    }
    design
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Smallest pairwise Euclidean distance between rows.
pub fn min_pairwise_distance(design: &DenseMatrix) -> f64 {
    let n = design.rows();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..i {
            best = best.min(sq_dist(design.row(i), design.row(j)));
        }
    }
    best.sqrt()
}

/// True when every column hits each of the `n` equal bins exactly once.
pub fn has_latin_property(design: &DenseMatrix) -> bool {
    let n = design.rows();
    (0..design.cols()).all(|j| {
        let mut seen = vec![false; n];
        (0..n).all(|i| {
            let v = design[(i, j)];
            if !(0.0..1.0).contains(&v) {
                return false;
            }
            let bin = ((v * n as f64).floor() as usize).min(n - 1);
            !std::mem::replace(&mut seen[bin], true)
        })
    })
}

struct SwapState {
    design: DenseMatrix,
    dist: Vec<f64>,
    n: usize,
}

impl SwapState {
    fn new(design: DenseMatrix) -> Self {
        let n = design.rows();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                let d = sq_dist(design.row(i), design.row(j));
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Self { design, dist, n }
    }

    fn closest_pair(&self) -> (usize, usize, f64) {
        let mut best = (0, 1, f64::INFINITY);
        for i in 0..self.n {
            for j in 0..i {
                let d = self.dist[i * self.n + j];
                if d < best.2 {
                    best = (i, j, d);
                }
            }
        }
        best
    }

    fn refresh_row(&mut self, i: usize) {
        for k in 0..self.n {
            if k != i {
                let d = sq_dist(self.design.row(i), self.design.row(k));
                self.dist[i * self.n + k] = d;
                self.dist[k * self.n + i] = d;
            }
        }
    }

    fn swap(&mut self, a: usize, b: usize, col: usize) {
        let va = self.design[(a, col)];
        self.design[(a, col)] = self.design[(b, col)];
        self.design[(b, col)] = va;
        self.refresh_row(a);
        self.refresh_row(b);
    }
}

/// Greedy coordinate-swap improvement of the minimum pairwise distance.
/// Swapping one coordinate between two rows keeps the Latin property; a swap
/// is kept only if the minimum distance strictly increases.
fn improve_by_swaps(design: DenseMatrix, attempts: usize, rng: &mut SeededRng) -> DenseMatrix {
    let n = design.rows();
    let p = design.cols();
    if n < 3 || p == 0 {
        return design;
    }
    let mut state = SwapState::new(design);
    let (mut ci, mut cj, mut current) = state.closest_pair();
    for _ in 0..attempts {
        // only moving a member of the closest pair can raise the minimum
        let a = if rng.uniform() < 0.5 { ci } else { cj };
        let mut b = rng.index(n - 1);
        if b >= a {
            b += 1;
        }
        let col = rng.index(p);
        state.swap(a, b, col);
        let (ni, nj, nd) = state.closest_pair();
        if nd > current {
            (ci, cj, current) = (ni, nj, nd);
        } else {
            state.swap(a, b, col);
        }
    }
    state.design
}

/// Maximin Latin hypercube: among `restarts` random candidates, each improved
/// by coordinate swaps, returns the one with the largest minimum pairwise
/// distance. Candidate 0 starts from the same stream position as
/// [`random_lhs`] called on an identically seeded generator.
pub fn maximin_lhs(n: usize, p: usize, rng: &mut SeededRng, restarts: usize) -> DenseMatrix {
    assert!(n >= 2, "maximin design needs at least two points");
    let attempts = 20 * n;
    let mut best: Option<(f64, DenseMatrix)> = None;
    for _ in 0..restarts.max(1) {
        let start = random_lhs(n, p, rng);
        let improved = improve_by_swaps(start, attempts, rng);
        let score = min_pairwise_distance(&improved);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, improved));
        }
    }
    best.expect("at least one restart").1
}

/// Sequential maximin Latin hypercube. Starting from a random cell, each new
/// point is the candidate farthest (on bin indices) from those already placed,
/// among `dup·m` candidates drawn from the `m` bins still free in every column.
/// Points are finally placed uniformly inside their cells.
pub fn greedy_maximin_lhs(n: usize, p: usize, rng: &mut SeededRng, dup: usize) -> DenseMatrix {
    assert!(n >= 2, "maximin design needs at least two points");
    let dup = dup.max(1);
    let mut free: Vec<Vec<usize>> = vec![(0..n).collect(); p];
    let mut cells: Vec<Vec<usize>> = Vec::with_capacity(n);
    let take = |free: &mut Vec<Vec<usize>>, cell: &[usize]| {
        for (col, &bin) in free.iter_mut().zip(cell) {
            let k = col.iter().position(|&b| b == bin).expect("bin is free");
            col.swap_remove(k);
        }
    };
    let first: Vec<usize> = (0..p).map(|_| rng.index(n)).collect();
    take(&mut free, &first);
    cells.push(first);
    for placed in 1..n {
        let m = n - placed;
        let mut best: Option<(usize, Vec<usize>)> = None;
        for _ in 0..dup * m {
            let cand: Vec<usize> = free.iter().map(|col| col[rng.index(m)]).collect();
            let score = cells
                .iter()
                .map(|c| c.iter().zip(&cand).map(|(a, b)| a.abs_diff(*b).pow(2)).sum::<usize>())
                .min()
                .expect("at least one placed point");
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, cand));
            }
        }
        let (_, cell) = best.expect("at least one candidate");
        take(&mut free, &cell);
        cells.push(cell);
    }
    let mut design = DenseMatrix::zeros(n, p);
    for (i, cell) in cells.iter().enumerate() {
        for (j, &bin) in cell.iter().enumerate() {
            design[(i, j)] = (bin as f64 + rng.uniform()) / n as f64;
        }
    }
    design
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_one_dim_occupy_both_bins() {
        let mut rng = SeededRng::new(1);
        let d = maximin_lhs(2, 1, &mut rng, 3);
        let mut v = d.column(0);
        v.sort_by(f64::total_cmp);
        assert!((0.0..0.5).contains(&v[0]));
        assert!((0.5..1.0).contains(&v[1]));
    }

    #[test]
    fn optimised_design_beats_its_starting_candidate() {
        let d = maximin_lhs(50, 5, &mut SeededRng::new(99), 4);
        let raw = random_lhs(50, 5, &mut SeededRng::new(99));
        assert!(has_latin_property(&d));
        assert!(has_latin_property(&raw));
        assert!(min_pairwise_distance(&d) >= min_pairwise_distance(&raw));
        // determinism
        let again = maximin_lhs(50, 5, &mut SeededRng::new(99), 4);
        assert_eq!(d, again);
    }

    #[test]
    fn greedy_design_is_latin_and_spread() {
        let (mut greedy, mut raw) = (0.0, 0.0);
        for seed in 0..10 {
            let d = greedy_maximin_lhs(50, 5, &mut SeededRng::new(seed), 1);
            assert!(has_latin_property(&d));
            greedy += min_pairwise_distance(&d);
            raw += min_pairwise_distance(&random_lhs(50, 5, &mut SeededRng::new(seed)));
        }
        assert!(greedy > raw);
        let a = greedy_maximin_lhs(10, 2, &mut SeededRng::new(7), 2);
        assert_eq!(a, greedy_maximin_lhs(10, 2, &mut SeededRng::new(7), 2));
    }

    #[test]
    fn latin_property_detects_collisions() {
        let d = DenseMatrix::from_rows(&[vec![0.1], vec![0.2]]).unwrap();
        assert!(!has_latin_property(&d));
    }
}
