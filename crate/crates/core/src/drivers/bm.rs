use crate::error::{param, Result};
use crate::grid::{Path, TimeGrid};
use crate::rng::{fill_normal, rng_from_seed, Rng};

/// Standard Brownian motion in `dim` independent components.
pub fn sample_bm(grid: &TimeGrid, dim: usize, seed: u64) -> Result<Path> {
    if dim == 0 {
        return Err(param("dim", "Brownian dimension must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    Ok(bm_path(grid, dim, &mut rng))
}

pub(crate) fn bm_path(grid: &TimeGrid, dim: usize, rng: &mut Rng) -> Path {
    let mut inc = vec![0.0; grid.n_steps * dim];
    fill_normal(rng, &mut inc, grid.h().sqrt());
    Path::from_increments(*grid, dim, &inc).expect("lengths agree")
}
