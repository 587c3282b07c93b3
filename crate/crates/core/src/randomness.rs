//! Seeded Brownian paths with dyadic (bridge) refinement.
//!
//! The generator algorithm is part of the external contract: every normal
//! sample comes from a ChaCha12 stream keyed by a SplitMix64-style mix of
//! `(seed, level, node)`, pushed through the Marsaglia polar transform. Any
//! refinement level is therefore reconstructible without replaying the draws
//! of other levels, and regeneration from a stored seed is bit-exact.

use crate::time::TimeGrid;
use crate::vect::Vect;
use crate::{flt, Result};
use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Discrete Brownian trajectory on a uniform time grid.
///
/// `values` holds one `dim`-vector per node; node 0 is pinned to zero and
/// per-step increments have variance `delta` per coordinate.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>,
    seed: u64,
    level: u32,
}

/// SplitMix64 finalizer, used to key per-(level, node) generator streams.
#[inline]
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix `(seed, level, node)` into one 64-bit stream key.
#[inline]
fn stream_key(seed: u64, level: u32, node: usize) -> u64 {
    let a = splitmix_finalize(seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(level as u64 + 1));
    splitmix_finalize(a ^ (node as u64).wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Uniform in (0, 1), 53-bit resolution.
#[inline]
fn uniform(rng: &mut ChaCha12Rng) -> f64 {
    loop {
        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u > 0.0 {
            return u;
        }
    }
}

/// Marsaglia polar transform: two independent standard normals.
fn polar_pair(rng: &mut ChaCha12Rng) -> (f64, f64) {
    loop {
        let u = 2.0 * uniform(rng) - 1.0;
        let v = 2.0 * uniform(rng) - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = flt::sqrt(-2.0 * flt::ln(s) / s);
            return (u * f, v * f);
        }
    }
}

/// `dim` standard normals from the stream keyed by `(seed, level, node)`.
fn node_normals(seed: u64, level: u32, node: usize, dim: usize) -> Vect {
    let mut rng = ChaCha12Rng::seed_from_u64(stream_key(seed, level, node));
    let (a, b) = polar_pair(&mut rng);
    if dim == 1 {
        [a, 0.0]
    } else {
        [a, b]
    }
}

impl BrownianPath {
    /// Generate a fresh path. `dim` must be 1 or 2.
    pub fn generate(seed: u64, grid: TimeGrid, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let n = grid.steps();
        let sd = flt::sqrt(grid.delta());
        let mut values = vec![0.0; (n + 1) * dim];
        for k in 0..n {
            let xi = node_normals(seed, 0, k, dim);
            for d in 0..dim {
                values[(k + 1) * dim + d] = values[k * dim + d] + sd * xi[d];
            }
        }
        Ok(BrownianPath {
            grid,
            dim,
            values,
            seed,
            level: 0,
        })
    }

    /// Brownian-bridge midpoint refinement: the new grid has twice the steps,
    /// coarse nodes are preserved exactly, and each midpoint is drawn from
    /// the bridge law (mean = node average, variance `delta/4` per
    /// coordinate) using the stream keyed by `(seed, level+1, coarse node)`.
    pub fn refine(&self) -> BrownianPath {
        let n = self.grid.steps();
        let dim = self.dim;
        let fine = self.grid.refined();
        let half_sd = flt::sqrt(self.grid.delta() / 4.0);
        let mut values = vec![0.0; (2 * n + 1) * dim];
        for k in 0..n {
            let xi = node_normals(self.seed, self.level + 1, k, dim);
            for d in 0..dim {
                let a = self.values[k * dim + d];
                let b = self.values[(k + 1) * dim + d];
                values[2 * k * dim + d] = a;
                values[(2 * k + 1) * dim + d] = 0.5 * (a + b) + half_sd * xi[d];
            }
        }
        for d in 0..dim {
            values[2 * n * dim + d] = self.values[n * dim + d];
        }
        BrownianPath {
            grid: fine,
            dim,
            values,
            seed: self.seed,
            level: self.level + 1,
        }
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Value at node `k`.
    #[inline]
    pub fn value(&self, k: usize) -> Vect {
        let mut v = [0.0, 0.0];
        for d in 0..self.dim {
            v[d] = self.values[k * self.dim + d];
        }
        v
    }

    /// Increment `W_{k+1} - W_k`.
    #[inline]
    pub fn increment(&self, k: usize) -> Vect {
        let mut v = [0.0, 0.0];
        for d in 0..self.dim {
            v[d] = self.values[(k + 1) * self.dim + d] - self.values[k * self.dim + d];
        }
        v
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(crate::Error::Config(alloc::format!(
            "spatial dimension must be 1 or 2, got {dim}"
        )))
    }
}
