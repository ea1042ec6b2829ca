use serde::{Deserialize, Serialize};

use super::model::{ModelDims, SlowFastModel};
use crate::drivers::{ControlPaths, MixedDriverPath};
use crate::error::{param, Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::lift::{dilate, lift_mixed, translate_by_path};
use crate::rde::{davie_update, guard, ControlledPath};
use crate::rng::{normal, rng_from_seed, stream_seed};

/// Default bound on `δ / ε`.
pub const DEFAULT_EPS_RATIO: f64 = 0.1;

/// Scale parameters `(ε, δ)` with the Khasminskii block length `Δ` and the
/// number of Euler–Maruyama micro steps per macro step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub eps: f64,
    pub delta: f64,
    pub block: f64,
    pub micro_steps: usize,
    pub eps_ratio: f64,
}

impl ScaleParams {
    /// All defaults: `Δ = δ^{1/(4β)} log δ⁻¹` on the grid, micro steps
    /// `max(16, ⌈16 h / δ⌉)`, `δ ≤ 0.1 ε`.
    pub fn new(eps: f64, delta: f64, grid: &TimeGrid, beta: f64) -> Result<Self> {
        Self::with(eps, delta, None, None, None, grid, beta)
    }

    pub fn with(
        eps: f64,
        delta: f64,
        block: Option<f64>,
        micro_steps: Option<usize>,
        eps_ratio: Option<f64>,
        grid: &TimeGrid,
        beta: f64,
    ) -> Result<Self> {
        let eps_ratio = eps_ratio.unwrap_or(DEFAULT_EPS_RATIO);
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(param("eps", format!("need 0 < eps <= 1, got {eps}")));
        }
        if !(delta > 0.0) {
            return Err(param("delta", format!("need delta > 0, got {delta}")));
        }
        if delta >= eps {
            return Err(param("delta", format!("need delta < eps, got delta={delta}, eps={eps}")));
        }
        if !(eps_ratio > 0.0 && eps_ratio < 1.0) {
            return Err(param("eps_ratio", format!("need 0 < eps_ratio < 1, got {eps_ratio}")));
        }
        if delta > eps_ratio * eps * (1.0 + 1e-12) {
            return Err(param(
                "delta",
                format!("need delta <= eps_ratio * eps = {}, got {delta}", eps_ratio * eps),
            ));
        }
        let h = grid.h();
        let block = match block {
            Some(b) => {
                let k = (b / h).round();
                if !(k >= 1.0) || (k * h - b).abs() > 1e-9 * b.max(h) {
                    return Err(param("block", format!("block length {b} is not a positive multiple of the step {h}")));
                }
                b
            }
            None => default_block(delta, beta, grid),
        };
        let micro_steps = match micro_steps {
            Some(0) => return Err(param("micro_steps", "must be positive")),
            Some(k) => k,
            None => default_micro_steps(delta, h),
        };
        Ok(Self { eps, delta, block, micro_steps, eps_ratio })
    }

    /// Block length in macro steps.
    pub fn block_steps(&self, grid: &TimeGrid) -> usize {
        ((self.block / grid.h()).round() as usize).max(1)
    }
}

/// `δ^{1/(4β)} log δ⁻¹`, rounded to the nearest positive multiple of the step
/// and capped at the horizon.
pub fn default_block(delta: f64, beta: f64, grid: &TimeGrid) -> f64 {
    let raw = delta.powf(1.0 / (4.0 * beta)) * (1.0 / delta).ln();
    let h = grid.h();
    let k = (raw / h).round().clamp(1.0, grid.n_steps as f64);
    k * h
}

/// `max(16, ⌈16 h / δ⌉)` so the micro step resolves `δ`.
pub fn default_micro_steps(delta: f64, h: f64) -> usize {
    ((16.0 * h / delta).ceil() as usize).max(16)
}

/// Brownian micro increments refining the macro path `w`.
///
/// For each macro step and component, `M` Gaussian draws are corrected by
/// their mean defect so they sum to the macro increment; this is the exact
/// Brownian-bridge conditional law. Layout `[step][micro][component]`.
pub fn micro_noise(w: &Path, micro_steps: usize, seed: u64) -> Vec<f64> {
    let (n, e, mm) = (w.grid.n_steps, w.dim, micro_steps);
    let hm = w.grid.h() / mm as f64;
    let sq = hm.sqrt();
    let mut rng = rng_from_seed(stream_seed(seed, 0xFA57));
    let mut out = vec![0.0; n * mm * e];
    let mut z = vec![0.0; mm];
    for k in 0..n {
        for c in 0..e {
            let dw = w.values[(k + 1) * e + c] - w.values[k * e + c];
            let mut sum = 0.0;
            for zi in z.iter_mut() {
                *zi = sq * normal(&mut rng);
                sum += *zi;
            }
            let corr = (sum - dw) / mm as f64;
            for i in 0..mm {
                out[(k * mm + i) * e + c] = z[i] - corr;
            }
        }
    }
    out
}

/// Output of [`integrate_slowfast`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlowFastPath {
    pub slow: ControlledPath,
    /// fast component at the macro grid points
    pub fast: Path,
    pub micro_steps: usize,
}

fn check_dims(model: &dyn SlowFastModel, x0: &[f64], y0: &[f64], driver: &MixedDriverPath) -> Result<ModelDims> {
    let dims = model.dims();
    if x0.len() != dims.m {
        return Err(param("x0", format!("expected {} components", dims.m)));
    }
    if y0.len() != dims.n {
        return Err(param("y0", format!("expected {} components", dims.n)));
    }
    if driver.d() != dims.d || driver.e() != dims.e {
        return Err(param("driver", format!("driver is ({}, {}), model needs ({}, {})", driver.d(), driver.e(), dims.d, dims.e)));
    }
    Ok(dims)
}

/// Integrates the (controlled) slow-fast system on the driver's grid.
///
/// The slow block takes third-order steps against the translated, dilated
/// fBm lift `T^u(εB^H)`; its drift is averaged over the fast micro path
/// inside each step. The fast block is the Itô SDE
/// `dY = δ⁻¹f₂ dt + (εδ)^{-1/2}σ₂ dv + δ^{-1/2}σ₂ dw` advanced by
/// Euler–Maruyama with the slow state frozen at the macro step start; the
/// control term uses the left-point value of `v̇`. `ctrl = None` is the zero
/// control.
pub fn integrate_slowfast(
    model: &dyn SlowFastModel,
    scales: &ScaleParams,
    x0: &[f64],
    y0: &[f64],
    driver: &MixedDriverPath,
    ctrl: Option<&ControlPaths>,
    seed: u64,
) -> Result<SlowFastPath> {
    let ModelDims { m, n: nf, d, e } = check_dims(model, x0, y0, driver)?;
    let grid = driver.grid;
    if scales.delta >= scales.eps {
        return Err(param("delta", "need delta < eps"));
    }
    let zero;
    let ctrl = match ctrl {
        Some(c) => {
            if c.u.grid != grid || c.u.dim != d || c.v.dim != e {
                return Err(param("control", "control shape does not match model and grid"));
            }
            c
        }
        None => {
            zero = ControlPaths::zero(grid, driver.hurst.h, d, e);
            &zero
        }
    };
    let base = lift_mixed(&driver.fbm_only(), 1)?;
    let slow_driver = translate_by_path(&dilate(&base, scales.eps)?, &ctrl.u)?;
    let mm = scales.micro_steps;
    let noise = micro_noise(&driver.w, mm, seed);

    let steps = grid.n_steps;
    let h = grid.h();
    let hm = h / mm as f64;
    let (eps, delta) = (scales.eps, scales.delta);
    let inv_delta = 1.0 / delta;
    let sw = 1.0 / delta.sqrt();
    let sv = 1.0 / (eps * delta).sqrt();

    let mut xs = Vec::with_capacity((steps + 1) * m);
    let mut ys = Vec::with_capacity((steps + 1) * nf);
    let mut gub = Vec::with_capacity((steps + 1) * m * d);
    xs.extend_from_slice(x0);
    ys.extend_from_slice(y0);
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut xn = vec![0.0; m];
    let mut f1 = vec![0.0; m];
    let mut acc = vec![0.0; m];
    let mut f2 = vec![0.0; nf];
    let mut s2 = vec![0.0; nf * e];
    let mut s1 = vec![0.0; m * d];
    let mut ds1 = vec![0.0; m * d * m];
    let mut kick = vec![0.0; e];
    for k in 0..steps {
        acc.iter_mut().for_each(|v| *v = 0.0);
        let vdot = &ctrl.ctrl.vdot[k * e..(k + 1) * e];
        for i in 0..mm {
            model.f1(&x, &y, &mut f1);
            for a in 0..m {
                acc[a] += f1[a] * hm;
            }
            model.f2(&x, &y, &mut f2);
            model.sigma2(&x, &y, &mut s2);
            let dw = &noise[(k * mm + i) * e..(k * mm + i + 1) * e];
            for c in 0..e {
                kick[c] = vdot[c] * hm * sv + dw[c] * sw;
            }
            for r in 0..nf {
                let mut v = y[r] + f2[r] * hm * inv_delta;
                for c in 0..e {
                    v += s2[r * e + c] * kick[c];
                }
                y[r] = v;
            }
        }
        guard(k + 1, &y).map_err(|err| match err {
            Error::Divergence { step, detail } => Error::Divergence { step, detail: format!("fast component: {detail}") },
            other => other,
        })?;
        model.sigma1(&x, &mut s1);
        model.dsigma1(&x, &mut ds1);
        gub.extend_from_slice(&s1);
        davie_update(m, d, &x, &acc, &s1, &ds1, slow_driver.step_inc(k), slow_driver.step_area(k), &mut xn);
        guard(k + 1, &xn)?;
        std::mem::swap(&mut x, &mut xn);
        xs.extend_from_slice(&x);
        ys.extend_from_slice(&y);
    }
    model.sigma1(&x, &mut s1);
    gub.extend_from_slice(&s1);
    Ok(SlowFastPath {
        slow: ControlledPath {
            grid,
            state_dim: m,
            noise_dim: d,
            values: xs,
            gubinelli: gub,
            driver_inc: slow_driver.inc.clone(),
        },
        fast: Path { grid, dim: nf, values: ys },
        micro_steps: mm,
    })
}

/// Auxiliary fast process with the slow argument frozen at block starts
/// `t(Δ) = ⌊t/Δ⌋Δ`, driven by the same micro increments as
/// [`integrate_slowfast`] for the same `w` and `seed`.
pub fn auxiliary_fast(
    model: &dyn SlowFastModel,
    scales: &ScaleParams,
    slow: &Path,
    w: &Path,
    y0: &[f64],
    seed: u64,
) -> Result<Path> {
    let ModelDims { m, n: nf, e, .. } = model.dims();
    if slow.dim != m || w.dim != e || slow.grid != w.grid || y0.len() != nf {
        return Err(param("auxiliary", "slow path, Brownian path and model dimensions disagree"));
    }
    let grid = slow.grid;
    let bs = scales.block_steps(&grid);
    let mm = scales.micro_steps;
    let noise = micro_noise(w, mm, seed);
    let hm = grid.h() / mm as f64;
    let inv_delta = 1.0 / scales.delta;
    let sw = 1.0 / scales.delta.sqrt();
    let mut ys = Vec::with_capacity((grid.n_steps + 1) * nf);
    ys.extend_from_slice(y0);
    let mut y = y0.to_vec();
    let mut f2 = vec![0.0; nf];
    let mut s2 = vec![0.0; nf * e];
    let mut kick = vec![0.0; e];
    for k in 0..grid.n_steps {
        let xf = slow.at((k / bs) * bs);
        for i in 0..mm {
            model.f2(xf, &y, &mut f2);
            model.sigma2(xf, &y, &mut s2);
            let dw = &noise[(k * mm + i) * e..(k * mm + i + 1) * e];
            // same rounding as the uncontrolled fast update
            for c in 0..e {
                kick[c] = dw[c] * sw;
            }
            for r in 0..nf {
                let mut v = y[r] + f2[r] * hm * inv_delta;
                for c in 0..e {
                    v += s2[r * e + c] * kick[c];
                }
                y[r] = v;
            }
        }
        guard(k + 1, &y)?;
        ys.extend_from_slice(&y);
    }
    Ok(Path { grid, dim: nf, values: ys })
}
