use serde::{Deserialize, Serialize};

use super::volterra::VolterraKernel;
use crate::error::{param, Result};
use crate::grid::{Path, TimeGrid};

/// Discretised Cameron–Martin element `(u, v)`.
///
/// `udot` holds the L² coefficients of the fractional block in the Volterra
/// representation and `vdot` the derivative of the Brownian block, both
/// piecewise constant per step and stored row-major (`n × d`, `n × e`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameronMartinControl {
    pub grid: TimeGrid,
    pub hurst: f64,
    pub d: usize,
    pub e: usize,
    pub udot: Vec<f64>,
    pub vdot: Vec<f64>,
    pub sq_norm: f64,
}

impl CameronMartinControl {
    pub fn new(grid: TimeGrid, hurst: f64, d: usize, e: usize, udot: Vec<f64>, vdot: Vec<f64>) -> Result<Self> {
        let n = grid.n_steps;
        if udot.len() != n * d {
            return Err(param("udot", format!("expected {} values, got {}", n * d, udot.len())));
        }
        if vdot.len() != n * e {
            return Err(param("vdot", format!("expected {} values, got {}", n * e, vdot.len())));
        }
        if udot.iter().chain(&vdot).any(|x| !x.is_finite()) {
            return Err(param("control", "non-finite coefficient"));
        }
        let sq_norm = sq_norm_of(&udot, &vdot, grid.h());
        Ok(Self { grid, hurst, d, e, udot, vdot, sq_norm })
    }

    pub fn zeros(grid: TimeGrid, hurst: f64, d: usize, e: usize) -> Self {
        let n = grid.n_steps;
        Self { grid, hurst, d, e, udot: vec![0.0; n * d], vdot: vec![0.0; n * e], sq_norm: 0.0 }
    }

    /// Checks the stored norm against the coefficients.
    pub fn validate(&self) -> Result<()> {
        let fresh = sq_norm_of(&self.udot, &self.vdot, self.grid.h());
        if (fresh - self.sq_norm).abs() > 1e-12 * fresh.max(1.0) {
            return Err(param("sq_norm", format!("stored {} but coefficients give {fresh}", self.sq_norm)));
        }
        Ok(())
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.grid,
            self.hurst,
            self.d,
            self.e,
            self.udot.iter().map(|x| lambda * x).collect(),
            self.vdot.iter().map(|x| lambda * x).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid || self.d != other.d || self.e != other.e || self.hurst != other.hurst {
            return Err(param("control", "shape mismatch"));
        }
        Self::new(
            self.grid,
            self.hurst,
            self.d,
            self.e,
            self.udot.iter().zip(&other.udot).map(|(a, b)| a + b).collect(),
            self.vdot.iter().zip(&other.vdot).map(|(a, b)| a + b).collect(),
        )
    }

    /// The same control with the Brownian block dropped.
    pub fn u_only(&self) -> Self {
        Self::new(self.grid, self.hurst, self.d, 0, self.udot.clone(), vec![]).expect("shape preserved")
    }
}

fn sq_norm_of(udot: &[f64], vdot: &[f64], h: f64) -> f64 {
    udot.iter().chain(vdot).map(|x| x * x).sum::<f64>() * h
}

/// `‖(u, v)‖²_ℋ = Σ_k (|udot_k|² + |vdot_k|²) h`, recomputed from coefficients.
pub fn cm_norm(ctrl: &CameronMartinControl) -> f64 {
    sq_norm_of(&ctrl.udot, &ctrl.vdot, ctrl.grid.h())
}

/// Reconstructs `(u, v)` on the grid.
pub fn cm_to_path(ctrl: &CameronMartinControl, kernel: &VolterraKernel) -> Result<(Path, Path)> {
    if kernel.grid() != &ctrl.grid || kernel.hurst() != ctrl.hurst {
        return Err(param("kernel", "kernel grid or Hurst index does not match the control"));
    }
    let u = kernel.apply(&ctrl.udot, ctrl.d);
    let mut inc = ctrl.vdot.clone();
    let h = ctrl.grid.h();
    inc.iter_mut().for_each(|x| *x *= h);
    let v = Path::from_increments(ctrl.grid, ctrl.e, &inc)?;
    Ok((u, v))
}

/// A control together with its reconstructed paths.
#[derive(Clone, Debug)]
pub struct ControlPaths {
    pub ctrl: CameronMartinControl,
    pub u: Path,
    pub v: Path,
}

impl ControlPaths {
    pub fn new(ctrl: CameronMartinControl, kernel: &VolterraKernel) -> Result<Self> {
        let (u, v) = cm_to_path(&ctrl, kernel)?;
        Ok(Self { ctrl, u, v })
    }

    pub fn zero(grid: TimeGrid, hurst: f64, d: usize, e: usize) -> Self {
        Self {
            ctrl: CameronMartinControl::zeros(grid, hurst, d, e),
            u: Path::zeros(grid, d),
            v: Path::zeros(grid, e),
        }
    }
}
