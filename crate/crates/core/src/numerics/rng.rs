//! Seeded randomness.
//!
//! Every stochastic routine takes a [`SeededRng`], a ChaCha8 stream keyed by a
//! 64-bit seed. ChaCha is counter based, so the stream for a given seed is the
//! same on every platform. Parallel work never shares a generator: task `i` of
//! a job seeded with `s` draws from `SeededRng::derive(s, i)`, which selects
//! ChaCha stream `i` under key `s`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent generator for `(seed, task)`.
    pub fn derive(seed: u64, task: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        // stream 0 is the parent's own stream
        inner.set_stream(task.wrapping_add(1));
        Self { seed, inner }
    }

    /// Child generator for task `task` of this generator's seed.
    pub fn child(&self, task: u64) -> Self {
        Self::derive(self.seed, task)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Packs a (block, replicate) pair into a task index for [`SeededRng::derive`].
pub fn task_index(block: u64, replicate: u64) -> u64 {
    (block << 32) | (replicate & 0xffff_ffff)
}
