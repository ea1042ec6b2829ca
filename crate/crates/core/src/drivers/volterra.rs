//! Volterra (Molchan–Golosov) kernel of fBm for `H <= 1/2`.
//!
//! `b_t = ∫_0^t K_H(t, s) dW_s`, and the Cameron–Martin element with
//! coefficient `udot ∈ L²` is `u_t = ∫_0^t K_H(t, s) udot_s ds` with
//! `‖u‖² = ‖udot‖²_{L²}`. With `udot` piecewise constant on the grid we need
//! cell integrals of the kernel, which have a closed form in incomplete beta
//! functions because `K_H(t, s) = t^{H-1/2} κ(s/t)` where `κ = K_H(1, ·)`.

use rayon::prelude::*;
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{param, Result};
use crate::grid::{Path, TimeGrid};

/// `c_H` normalising `∫_0^1 K_H(1, s)^2 ds = 1`.
pub fn kernel_constant(hurst: f64) -> f64 {
    if hurst == 0.5 {
        return 1.0;
    }
    let b = ln_beta(1.0 - 2.0 * hurst, hurst + 0.5).exp();
    (2.0 * hurst / ((1.0 - 2.0 * hurst) * b)).sqrt()
}

/// Pointwise kernel value `K_H(t, s)` for `0 < s < t`, `H < 1/2`.
///
/// The inner integral is evaluated through the same incomplete beta functions
/// as the cumulative kernel, so this is exact up to special-function accuracy.
pub fn kernel(hurst: f64, t: f64, s: f64) -> f64 {
    if hurst == 0.5 {
        return if s < t { 1.0 } else { 0.0 };
    }
    if !(s > 0.0 && s < t) {
        return 0.0;
    }
    let y = s / t;
    let hm = hurst - 0.5;
    // ∫_y^1 r^{H-3/2}(r-y)^{H-1/2} dr = y^{2H-1} ∫_0^{1-y} ... = y^{2H-1} B(1-y; H+1/2, 1-2H)
    let a = hurst + 0.5;
    let b = 1.0 - 2.0 * hurst;
    let inner = y.powf(2.0 * hurst - 1.0) * ln_beta(a, b).exp() * beta_reg(a, b, 1.0 - y);
    let k1 = (1.0 / y).powf(hm) * (1.0 - y).powf(hm);
    let k = kernel_constant(hurst) * (k1 - hm * y.powf(-hm) * inner);
    t.powf(hm) * k
}

/// `Φ(y) = ∫_0^y K_H(1, s) ds` for `y ∈ [0, 1]`.
pub fn cumulative_kernel(hurst: f64, y: f64) -> f64 {
    if hurst == 0.5 {
        return y;
    }
    if y <= 0.0 {
        return 0.0;
    }
    let y = y.min(1.0);
    let hp = hurst + 0.5;
    let (a1, b1) = (1.5 - hurst, hp);
    let (a2, b2) = (1.0 - 2.0 * hurst, hp);
    let beta1 = ln_beta(a1, b1).exp();
    let beta2 = ln_beta(a2, b2).exp();
    let inc1 = beta1 * beta_reg(a1, b1, y);
    // B2full - B2(y) = B2full * (1 - I_y) = B2full * I_{1-y}(b2, a2)
    let tail2 = beta2 * beta_reg(b2, a2, 1.0 - y);
    kernel_constant(hurst) / hp * (inc1 + (0.5 - hurst) * y.powf(hp) * tail2)
}

/// Cell integrals `W[j][k] = ∫_{t_k}^{t_{k+1}} K_H(t_j, s) ds` for `k < j`.
pub struct VolterraKernel {
    grid: TimeGrid,
    hurst: f64,
    // row j (1..=n) stored at offset j(j-1)/2; `None` for H = 1/2 (indicator)
    weights: Option<Vec<f64>>,
}

impl VolterraKernel {
    pub fn new(grid: &TimeGrid, hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst <= 0.5) {
            return Err(param("hurst", format!("Volterra kernel needs H in (0, 1/2], got {hurst}")));
        }
        if hurst == 0.5 {
            return Ok(Self { grid: *grid, hurst, weights: None });
        }
        let n = grid.n_steps;
        let hp = hurst + 0.5;
        let step = grid.h().powf(hp);
        let rows: Vec<Vec<f64>> = (1..=n)
            .into_par_iter()
            .map(|j| {
                let jf = j as f64;
                let scale = step * jf.powf(hp);
                let mut prev = 0.0;
                (0..j)
                    .map(|k| {
                        let next = cumulative_kernel(hurst, (k + 1) as f64 / jf);
                        let w = scale * (next - prev);
                        prev = next;
                        w
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: *grid,
            hurst,
            weights: Some(rows.concat()),
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn weight(&self, j: usize, k: usize) -> f64 {
        if k >= j {
            return 0.0;
        }
        match &self.weights {
            None => self.grid.h(),
            Some(w) => w[j * (j - 1) / 2 + k],
        }
    }

    /// Path values `u_{t_j} = Σ_k W[j][k] udot_k` (udot is `n × dim`).
    pub fn apply(&self, udot: &[f64], dim: usize) -> Path {
        let n = self.grid.n_steps;
        let mut path = Path::zeros(self.grid, dim);
        match &self.weights {
            None => {
                let h = self.grid.h();
                for k in 0..n {
                    for c in 0..dim {
                        path.values[(k + 1) * dim + c] = path.values[k * dim + c] + udot[k * dim + c] * h;
                    }
                }
            }
            Some(w) => {
                let rows: Vec<Vec<f64>> = (1..=n)
                    .into_par_iter()
                    .map(|j| {
                        let row = &w[j * (j - 1) / 2..j * (j - 1) / 2 + j];
                        let mut acc = vec![0.0; dim];
                        for (k, wk) in row.iter().enumerate() {
                            for c in 0..dim {
                                acc[c] += wk * udot[k * dim + c];
                            }
                        }
                        acc
                    })
                    .collect();
                for (j, r) in rows.into_iter().enumerate() {
                    path.values[(j + 1) * dim..(j + 2) * dim].copy_from_slice(&r);
                }
            }
        }
        path
    }

    /// Adjoint of [`apply`]: given `g_j = ∂L/∂u_{t_j}` (`(n+1) × dim`),
    /// returns `∂L/∂udot_k = Σ_j W[j][k] g_j` (`n × dim`).
    pub fn apply_transpose(&self, g: &[f64], dim: usize) -> Vec<f64> {
        let n = self.grid.n_steps;
        let mut out = vec![0.0; n * dim];
        match &self.weights {
            None => {
                let h = self.grid.h();
                let mut acc = vec![0.0; dim];
                for k in (0..n).rev() {
                    for c in 0..dim {
                        acc[c] += g[(k + 1) * dim + c];
                        out[k * dim + c] = acc[c] * h;
                    }
                }
            }
            Some(w) => {
                for j in 1..=n {
                    let row = &w[j * (j - 1) / 2..j * (j - 1) / 2 + j];
                    for (k, wk) in row.iter().enumerate() {
                        for c in 0..dim {
                            out[k * dim + c] += wk * g[j * dim + c];
                        }
                    }
                }
            }
        }
        out
    }
}
