use serde::{Deserialize, Serialize};

use super::vector_field::VectorField;
use crate::error::{param, Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::lift::Level2RoughPath;

/// States beyond this norm are reported as divergence.
pub const DIVERGENCE_CAP: f64 = 1e12;

/// Solution `Y` with Gubinelli derivative `Y†` and the driver increments
/// needed to evaluate the remainder `R_{s,t} = Y_{s,t} − Y†_s Ξ¹_{s,t}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlledPath {
    pub grid: TimeGrid,
    pub state_dim: usize,
    pub noise_dim: usize,
    /// `(n+1) × m`
    pub values: Vec<f64>,
    /// `(n+1) × m × d`
    pub gubinelli: Vec<f64>,
    /// `n × d`
    pub driver_inc: Vec<f64>,
}

impl ControlledPath {
    pub fn y(&self, k: usize) -> &[f64] {
        &self.values[k * self.state_dim..(k + 1) * self.state_dim]
    }

    pub fn ydag(&self, k: usize) -> &[f64] {
        let md = self.state_dim * self.noise_dim;
        &self.gubinelli[k * md..(k + 1) * md]
    }

    pub fn path(&self) -> Path {
        Path { grid: self.grid, dim: self.state_dim, values: self.values.clone() }
    }

    pub fn terminal(&self) -> &[f64] {
        self.y(self.grid.n_steps)
    }

    /// `R_{s,t}` for grid indices `s < t`.
    pub fn remainder(&self, s: usize, t: usize) -> Vec<f64> {
        let (m, d) = (self.state_dim, self.noise_dim);
        let mut xi = vec![0.0; d];
        for k in s..t {
            for j in 0..d {
                xi[j] += self.driver_inc[k * d + j];
            }
        }
        let (ys, yt, g) = (self.y(s), self.y(t), self.ydag(s));
        (0..m)
            .map(|a| yt[a] - ys[a] - (0..d).map(|j| g[a * d + j] * xi[j]).sum::<f64>())
            .collect()
    }

    /// Steps `k0..k1` on a grid starting at zero.
    pub fn window(&self, k0: usize, k1: usize) -> Result<Self> {
        let (m, d) = (self.state_dim, self.noise_dim);
        Ok(Self {
            grid: self.grid.window(k0, k1)?,
            state_dim: m,
            noise_dim: d,
            values: self.values[k0 * m..(k1 + 1) * m].to_vec(),
            gubinelli: self.gubinelli[k0 * m * d..(k1 + 1) * m * d].to_vec(),
            driver_inc: self.driver_inc[k0 * d..k1 * d].to_vec(),
        })
    }
}

/// One step of the third-order scheme:
/// `y + f h + σ Ξ¹ + Σ_{ij} (Σ_b ∂_b σ_{aj} σ_{bi}) Ξ²_{ij}`.
///
/// `drift_h` is the drift contribution already integrated over the step.
#[allow(clippy::too_many_arguments)]
pub(crate) fn davie_update(
    m: usize,
    d: usize,
    y: &[f64],
    drift_h: &[f64],
    sigma: &[f64],
    dsigma: &[f64],
    inc: &[f64],
    area: &[f64],
    out: &mut [f64],
) {
    for a in 0..m {
        let mut acc = y[a] + drift_h[a];
        for j in 0..d {
            acc += sigma[a * d + j] * inc[j];
        }
        for i in 0..d {
            for j in 0..d {
                let x2 = area[i * d + j];
                if x2 == 0.0 {
                    continue;
                }
                let mut c = 0.0;
                for b in 0..m {
                    c += dsigma[(a * d + j) * m + b] * sigma[b * d + i];
                }
                acc += c * x2;
            }
        }
        out[a] = acc;
    }
}

pub(crate) fn guard(step: usize, y: &[f64]) -> Result<()> {
    let n2: f64 = y.iter().map(|x| x * x).sum();
    if !n2.is_finite() || n2.sqrt() > DIVERGENCE_CAP {
        return Err(Error::Divergence { step, detail: format!("state norm {} exceeds cap {DIVERGENCE_CAP:e}", n2.sqrt()) });
    }
    Ok(())
}

/// Solves `dY = f(Y) dt + σ(Y) dΞ`, `Y_0 = y0`, on the driver's grid.
pub fn solve_rde<V: VectorField + ?Sized>(vf: &V, driver: &Level2RoughPath, y0: &[f64]) -> Result<ControlledPath> {
    let (m, d) = (vf.state_dim(), vf.noise_dim());
    if driver.dim != d {
        return Err(param("driver", format!("driver has {} components, vector field expects {d}", driver.dim)));
    }
    if y0.len() != m {
        return Err(param("y0", format!("expected {m} components, got {}", y0.len())));
    }
    let n = driver.grid.n_steps;
    let h = driver.grid.h();
    let mut values = Vec::with_capacity((n + 1) * m);
    let mut gub = Vec::with_capacity((n + 1) * m * d);
    values.extend_from_slice(y0);
    guard(0, y0)?;
    let mut y = y0.to_vec();
    let mut next = vec![0.0; m];
    let mut f = vec![0.0; m];
    let mut s = vec![0.0; m * d];
    let mut ds = vec![0.0; m * d * m];
    for k in 0..n {
        vf.drift(&y, &mut f);
        vf.sigma(&y, &mut s);
        vf.dsigma(&y, &mut ds);
        gub.extend_from_slice(&s);
        f.iter_mut().for_each(|x| *x *= h);
        davie_update(m, d, &y, &f, &s, &ds, driver.step_inc(k), driver.step_area(k), &mut next);
        guard(k + 1, &next)?;
        std::mem::swap(&mut y, &mut next);
        values.extend_from_slice(&y);
    }
    vf.sigma(&y, &mut s);
    gub.extend_from_slice(&s);
    Ok(ControlledPath {
        grid: driver.grid,
        state_dim: m,
        noise_dim: d,
        values,
        gubinelli: gub,
        driver_inc: driver.inc.clone(),
    })
}
