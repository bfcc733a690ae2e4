//! Seeded random streams.
//!
//! Every stream is a xoshiro256** generator whose 256-bit state is expanded
//! from a 64-bit seed with SplitMix64 (increment `0x9E3779B97F4A7C15`,
//! multipliers `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`). Child streams
//! are keyed by `(seed, label)` only, so deriving a child never depends on how
//! far the parent has advanced and never advances it.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256StarStar;

use super::matrix::Matrix;
use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output step applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Distribution {
    Uniform01,
    StandardNormal,
}

#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    position: u64,
    inner: Xoshiro256StarStar,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            position: 0,
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of scalar draws taken from this stream so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Independent child stream for `label`.
    pub fn split(&self, label: u64) -> RngState {
        RngState::new(splitmix64(splitmix64(self.seed) ^ label.wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn uniform(&mut self) -> f64 {
        self.position += 1;
        self.inner.gen::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.position += 1;
        self.inner.sample(StandardNormal)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.position += 1;
        self.inner.next_u64()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        self.position += items.len() as u64;
        items.shuffle(&mut self.inner);
    }

    /// Random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }

    pub fn fill(&mut self, dist: Distribution, out: &mut [f64]) {
        match dist {
            Distribution::Uniform01 => out.iter_mut().for_each(|v| *v = self.inner.gen::<f64>()),
            Distribution::StandardNormal => {
                out.iter_mut().for_each(|v| *v = self.inner.sample(StandardNormal))
            }
        }
        self.position += out.len() as u64;
    }
}

/// `rows × cols` i.i.d. draws from `dist`.
pub fn sample(rng: &mut RngState, dist: Distribution, rows: usize, cols: usize) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::arg(format!("sample shape must be positive, got {rows}x{cols}")));
    }
    let mut m = Matrix::zeros(rows, cols);
    rng.fill(dist, m.data_mut());
    Ok(m)
}
