//! Exact fractional Gaussian noise by circulant embedding, with a Cholesky
//! fallback when the embedding is not nonnegative definite.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{param, Error, Result};
use crate::grid::{HurstParam, Path, TimeGrid};
use crate::rng::{normal, rng_from_seed, Rng};

/// Largest grid for which the O(n^3) Cholesky fallback is attempted.
const CHOLESKY_MAX: usize = 4096;

/// Autocovariance of unit-step fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let k = k as f64;
    let p = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).abs().powf(p))
}

enum Method {
    Circulant {
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        lower: Vec<f64>,
    },
}

/// Reusable sampler of fBm increments on a fixed grid.
pub struct FbmSampler {
    n: usize,
    scale: f64,
    method: Method,
}

impl FbmSampler {
    pub fn new(grid: &TimeGrid, hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        let n = grid.n_steps;
        let m = 2 * n;
        let mut c: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..=n {
            c[k].re = fgn_autocovariance(k, hurst);
        }
        for k in 1..n {
            c[m - k].re = fgn_autocovariance(k, hurst);
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut c);
        let max = c.iter().map(|z| z.re).fold(0.0, f64::max);
        let min = c.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min < -1e-10 * max {
            return Self::with_cholesky(grid, hurst);
        }
        let sqrt_eig = c.iter().map(|z| (z.re.max(0.0) / m as f64).sqrt()).collect();
        Ok(Self {
            n,
            scale: grid.h().powf(hurst),
            method: Method::Circulant { sqrt_eig, fft },
        })
    }

    /// Forces the Cholesky method (used as fallback and as a cross-check).
    pub fn with_cholesky(grid: &TimeGrid, hurst: f64) -> Result<Self> {
        check_hurst(hurst)?;
        let n = grid.n_steps;
        if n > CHOLESKY_MAX {
            return Err(Error::Resource(format!(
                "Cholesky fallback limited to {CHOLESKY_MAX} steps, grid has {n}"
            )));
        }
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = fgn_autocovariance(i.abs_diff(j), hurst);
            }
        }
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if d <= 0.0 {
                return Err(Error::Resource("covariance not positive definite".into()));
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
            for k in j + 1..n {
                a[j * n + k] = 0.0;
            }
        }
        Ok(Self {
            n,
            scale: grid.h().powf(hurst),
            method: Method::Cholesky { lower: a },
        })
    }

    pub fn uses_circulant(&self) -> bool {
        matches!(self.method, Method::Circulant { .. })
    }

    /// Fills `out` (length n) with one draw of the increments.
    pub fn sample_increments(&self, rng: &mut Rng, out: &mut [f64]) {
        let n = self.n;
        match &self.method {
            Method::Circulant { sqrt_eig, fft } => {
                let mut z: Vec<Complex64> = sqrt_eig
                    .iter()
                    .map(|&s| {
                        let a = normal(rng);
                        let b = normal(rng);
                        Complex64::new(s * a, s * b)
                    })
                    .collect();
                fft.process(&mut z);
                for k in 0..n {
                    out[k] = self.scale * z[k].re;
                }
            }
            Method::Cholesky { lower } => {
                let z: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
                for i in 0..n {
                    let mut s = 0.0;
                    for k in 0..=i {
                        s += lower[i * n + k] * z[k];
                    }
                    out[i] = self.scale * s;
                }
            }
        }
    }

    /// `dim` independent components, each a path starting at zero.
    pub fn sample_path(&self, grid: &TimeGrid, dim: usize, rng: &mut Rng) -> Path {
        let mut path = Path::zeros(*grid, dim);
        let mut inc = vec![0.0; self.n];
        for c in 0..dim {
            self.sample_increments(rng, &mut inc);
            let mut acc = 0.0;
            for k in 0..self.n {
                acc += inc[k];
                path.values[(k + 1) * dim + c] = acc;
            }
        }
        path
    }
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(param("hurst", format!("H must lie in (0, 1), got {hurst}")));
    }
    Ok(())
}

/// Samples a `dim`-dimensional fBm with independent components.
pub fn sample_fbm(grid: &TimeGrid, hurst: &HurstParam, dim: usize, seed: u64) -> Result<Path> {
    sample_fbm_raw(grid, hurst.h, dim, seed)
}

/// As [`sample_fbm`] but accepts any `H` in `(0, 1)`.
pub fn sample_fbm_raw(grid: &TimeGrid, hurst: f64, dim: usize, seed: u64) -> Result<Path> {
    let sampler = FbmSampler::new(grid, hurst)?;
    let mut rng = rng_from_seed(seed);
    Ok(sampler.sample_path(grid, dim, &mut rng))
}
