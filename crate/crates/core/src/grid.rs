//! Brownian paths on a uniform fine grid.
//!
//! All pathwise objects in this crate live on a [`FineGrid`]: `M` equal steps
//! over `[0, T]`. Path generation is deterministic given a [`SeedSpec`];
//! distinct stream indices select statistically independent ChaCha streams,
//! so replications parallelize without coordination.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t_i = i * T / M`, `i = 0..=M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FineGrid {
    steps: usize,
    horizon: f64,
}

impl FineGrid {
    pub fn new(steps: usize, horizon: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Config(format!(
                "grid needs at least 2 steps, got {steps}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("invalid grid horizon {horizon}")));
        }
        Ok(Self { steps, horizon })
    }

    /// Grid on `[0, 1]` with the given number of steps.
    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(steps, 1.0)
    }

    /// Grid on `[0, 1]` with `2^exp` steps.
    pub fn from_exponent(exp: u32) -> Result<Self> {
        if exp > 40 {
            return Err(Error::Config(format!("grid exponent {exp} too large")));
        }
        Self::unit(1usize << exp)
    }

    /// Number of steps `M`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of grid points `M + 1`.
    pub fn num_points(&self) -> usize {
        self.steps + 1
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Time of grid index `i`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step_size()
    }
}

/// A scalar path sampled on a [`FineGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: FineGrid,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(grid: FineGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::Argument(format!(
                "path length {} does not match grid with {} points",
                values.len(),
                grid.num_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &FineGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Time of grid index `i`.
    pub fn time(&self, i: usize) -> f64 {
        self.grid.time(i)
    }

    pub fn num_points(&self) -> usize {
        self.values.len()
    }

    /// Last grid index (`M`).
    pub fn last_index(&self) -> usize {
        self.values.len() - 1
    }
}

/// Identifies one reproducible random stream: the same `(master_seed,
/// stream_index)` pair regenerates the identical path bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// The generator for this stream. ChaCha streams are counter-separated,
    /// so different stream indices never overlap.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Derive an unrelated master seed for a sub-experiment (splitmix64 round).
pub fn derive_seed(master_seed: u64, domain: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(domain.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Incremental Wiener sampler: yields `W(t_1), W(t_2), ...` for a fixed step
/// size, starting from `W(0) = 0`. [`sample_wiener`] is built on this, so a
/// streamed scan and a stored path consume the generator identically.
pub struct WienerSampler {
    rng: ChaCha8Rng,
    increment_sd: f64,
    current: f64,
}

impl WienerSampler {
    pub fn new(seed: SeedSpec, step_size: f64) -> Self {
        Self::from_rng(seed.rng(), step_size)
    }

    pub fn from_rng(rng: ChaCha8Rng, step_size: f64) -> Self {
        Self {
            rng,
            increment_sd: step_size.sqrt(),
            current: 0.0,
        }
    }

    /// Advance one grid step and return the new path value.
    #[inline]
    pub fn next_value(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.current += self.increment_sd * z;
        self.current
    }
}

/// Sample a Brownian path on `grid`: `W(0) = 0`, i.i.d. centered Gaussian
/// increments of variance `T / M`.
pub fn sample_wiener(grid: &FineGrid, seed: SeedSpec) -> SamplePath {
    sample_wiener_from(seed.rng(), grid)
}

/// As [`sample_wiener`] but continuing an existing generator (used when the
/// initial value of an SDE has already been drawn from the same stream).
pub fn sample_wiener_from(rng: ChaCha8Rng, grid: &FineGrid) -> SamplePath {
    let mut sampler = WienerSampler::from_rng(rng, grid.step_size());
    let mut values = Vec::with_capacity(grid.num_points());
    values.push(0.0);
    for _ in 0..grid.steps() {
        values.push(sampler.next_value());
    }
    SamplePath {
        grid: *grid,
        values,
    }
}

/// The shifted restriction `W(t) - W(t_from)` on `[t_from, t_to]`, re-indexed
/// to start at time zero. The first value is exactly zero.
pub fn shifted_subpath(
    path: &SamplePath,
    from_index: usize,
    to_index: usize,
) -> Result<SamplePath> {
    if from_index >= to_index || to_index > path.last_index() {
        return Err(Error::Argument(format!(
            "invalid subpath range [{from_index}, {to_index}] on path with last index {}",
            path.last_index()
        )));
    }
    let steps = to_index - from_index;
    let step = path.grid.step_size();
    let base = path.values[from_index];
    let values: Vec<f64> = path.values[from_index..=to_index]
        .iter()
        .map(|v| v - base)
        .collect();
    let grid = FineGrid {
        steps,
        horizon: steps as f64 * step,
    };
    Ok(SamplePath { grid, values })
}
