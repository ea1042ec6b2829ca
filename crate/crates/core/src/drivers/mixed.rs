use serde::{Deserialize, Serialize};

use super::bm::bm_path;
use super::fbm::FbmSampler;
use crate::error::{param, Result};
use crate::grid::{HurstParam, Path, TimeGrid};
use crate::rng::{rng_from_seed, stream_seed};

/// A sampled mixed driver `(b^H, w)`: fBm in `d` components and an independent
/// Brownian motion in `e` components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedDriverPath {
    pub grid: TimeGrid,
    pub hurst: HurstParam,
    pub bh: Path,
    pub w: Path,
}

impl MixedDriverPath {
    /// Assembles a driver from given paths (deterministic drivers included).
    pub fn from_parts(hurst: HurstParam, bh: Path, w: Path) -> Result<Self> {
        if bh.grid != w.grid {
            return Err(param("driver", "fBm and Brownian paths live on different grids"));
        }
        if bh.at(0).iter().chain(w.at(0)).any(|x| *x != 0.0) {
            return Err(param("driver", "paths must start at zero"));
        }
        Ok(Self { grid: bh.grid, hurst, bh, w })
    }

    pub fn d(&self) -> usize {
        self.bh.dim
    }

    pub fn e(&self) -> usize {
        self.w.dim
    }

    /// The fBm block alone (`e = 0`).
    pub fn fbm_only(&self) -> Self {
        Self { grid: self.grid, hurst: self.hurst, bh: self.bh.clone(), w: Path::zeros(self.grid, 0) }
    }
}

/// Reusable sampler for many replicas on one grid.
pub struct MixedSampler {
    grid: TimeGrid,
    hurst: HurstParam,
    d: usize,
    e: usize,
    fbm: FbmSampler,
}

impl MixedSampler {
    pub fn new(grid: &TimeGrid, hurst: &HurstParam, d: usize, e: usize) -> Result<Self> {
        Ok(Self { grid: *grid, hurst: *hurst, d, e, fbm: FbmSampler::new(grid, hurst.h)? })
    }

    /// fBm from sub-stream 0 of `seed`, Brownian motion from sub-stream 1.
    pub fn sample(&self, seed: u64) -> MixedDriverPath {
        let mut rb = rng_from_seed(stream_seed(seed, 0));
        let bh = self.fbm.sample_path(&self.grid, self.d, &mut rb);
        let mut rw = rng_from_seed(stream_seed(seed, 1));
        let w = bm_path(&self.grid, self.e, &mut rw);
        MixedDriverPath { grid: self.grid, hurst: self.hurst, bh, w }
    }
}

/// One mixed-driver sample.
pub fn sample_mixed(grid: &TimeGrid, hurst: &HurstParam, d: usize, e: usize, seed: u64) -> Result<MixedDriverPath> {
    Ok(MixedSampler::new(grid, hurst, d, e)?.sample(seed))
}
