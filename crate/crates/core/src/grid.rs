//! Uniform dyadic time grids, Hurst parameters and sampled paths.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Uniform grid `t_k = k T / n` on `[0, T]` with `n` a power of two.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(param("horizon", format!("must be positive and finite, got {horizon}")));
        }
        if n_steps == 0 || !n_steps.is_power_of_two() {
            return Err(param("n_steps", format!("must be a power of two, got {n_steps}")));
        }
        Ok(Self { horizon, n_steps })
    }

    /// Step size `h = T / n`.
    pub fn h(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn t(&self, k: usize) -> f64 {
        // exact at k = n because n is a power of two
        (k as f64 / self.n_steps as f64) * self.horizon
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.t(k)).collect()
    }

    /// Grid with `factor` times more steps on the same horizon.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        Self::new(self.horizon, self.n_steps * factor)
    }

    /// Grid with `factor` times fewer steps on the same horizon.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(param("refine", format!("{factor} does not divide {}", self.n_steps)));
        }
        Self::new(self.horizon, self.n_steps / factor)
    }

    /// Sub-grid covering steps `k0..k1`, shifted to start at zero.
    pub fn window(&self, k0: usize, k1: usize) -> Result<Self> {
        if k0 >= k1 || k1 > self.n_steps {
            return Err(param("window", format!("bad range {k0}..{k1}")));
        }
        Self::new(self.t(k1) - self.t(k0), k1 - k0)
    }
}

/// Hurst index with the two Hölder exponents used downstream:
/// `1/3 < beta < alpha < H <= 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HurstParam {
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl HurstParam {
    /// Picks `alpha`, `beta` at two thirds and one third of the way from 1/3 to H.
    pub fn new(h: f64) -> Result<Self> {
        let third = 1.0 / 3.0;
        let alpha = third + 2.0 * (h - third) / 3.0;
        let beta = third + (h - third) / 3.0;
        Self::with_exponents(h, alpha, beta)
    }

    pub fn with_exponents(h: f64, alpha: f64, beta: f64) -> Result<Self> {
        let third = 1.0 / 3.0;
        if !(h > third && h <= 0.5) {
            return Err(param("hurst", format!("H must lie in (1/3, 1/2], got {h}")));
        }
        if !(alpha > third && alpha < h) {
            return Err(param("alpha", format!("need 1/3 < alpha < H, got {alpha}")));
        }
        if !(beta > third && beta < alpha) {
            return Err(param("beta", format!("need 1/3 < beta < alpha, got {beta}")));
        }
        Ok(Self { h, alpha, beta })
    }

    /// H = 1/2 is admitted only as an analytically tractable check regime.
    pub fn is_brownian_oracle(&self) -> bool {
        self.h == 0.5
    }
}

/// Values of a `dim`-dimensional path at every grid point, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: TimeGrid,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Path {
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; (grid.n_steps + 1) * dim],
        }
    }

    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (grid.n_steps + 1) * dim {
            return Err(param(
                "values",
                format!("expected {} entries, got {}", (grid.n_steps + 1) * dim, values.len()),
            ));
        }
        Ok(Self { grid, dim, values })
    }

    /// Path starting at zero with the given per-step increments.
    pub fn from_increments(grid: TimeGrid, dim: usize, inc: &[f64]) -> Result<Self> {
        if inc.len() != grid.n_steps * dim {
            return Err(param("increments", "length does not match grid and dim"));
        }
        let mut p = Self::zeros(grid, dim);
        for k in 0..grid.n_steps {
            for c in 0..dim {
                p.values[(k + 1) * dim + c] = p.values[k * dim + c] + inc[k * dim + c];
            }
        }
        Ok(p)
    }

    /// Samples `f(t_k)` on the grid.
    pub fn from_fn(grid: TimeGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity((grid.n_steps + 1) * dim);
        for k in 0..=grid.n_steps {
            let v = f(grid.t(k));
            assert_eq!(v.len(), dim);
            values.extend(v);
        }
        Self { grid, dim, values }
    }

    pub fn len(&self) -> usize {
        self.grid.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn at_mut(&mut self, k: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.values[k * d..(k + 1) * d]
    }

    pub fn increments(&self) -> Vec<f64> {
        let d = self.dim;
        (0..self.grid.n_steps * d)
            .map(|i| self.values[i + d] - self.values[i])
            .collect()
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.values[k * self.dim + c]).collect()
    }

    pub fn terminal(&self) -> &[f64] {
        self.at(self.grid.n_steps)
    }

    /// Every `factor`-th grid point.
    pub fn restrict(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsen(factor)?;
        let mut values = Vec::with_capacity((grid.n_steps + 1) * self.dim);
        for k in 0..=grid.n_steps {
            values.extend_from_slice(self.at(k * factor));
        }
        Ok(Self { grid, dim: self.dim, values })
    }

    /// `sup_k |x_k - y_k|` with the Euclidean norm in space.
    pub fn sup_distance(&self, other: &Path) -> Result<f64> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(param("path", "grid or dimension mismatch"));
        }
        let mut sup: f64 = 0.0;
        for k in 0..self.len() {
            let d2: f64 = self
                .at(k)
                .iter()
                .zip(other.at(k))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sup = sup.max(d2.sqrt());
        }
        Ok(sup)
    }

    /// Concatenates components of two paths on the same grid.
    pub fn stack(a: &Path, b: &Path) -> Result<Self> {
        if a.grid != b.grid {
            return Err(param("path", "grid mismatch"));
        }
        let dim = a.dim + b.dim;
        let mut values = Vec::with_capacity(a.len() * dim);
        for k in 0..a.len() {
            values.extend_from_slice(a.at(k));
            values.extend_from_slice(b.at(k));
        }
        Ok(Self { grid: a.grid, dim, values })
    }
}

/// Values on an arbitrary uniform step (the frozen fast chains run on a
/// step that need not divide a dyadic grid).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.values[k * self.dim + c]).collect()
    }
}
