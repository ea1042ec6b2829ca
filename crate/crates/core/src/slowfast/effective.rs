use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::invariant::{averaged_drift, estimate_invariant_measure, DriftSource, InvariantSettings};
use super::model::{ModelDims, SlowFastModel};
use crate::error::{param, Result};
use crate::grid::{Path, TimeGrid};
use crate::rde::{guard, FD_STEP};
use crate::rng::stream_seed;

/// Relative margin added around the visited box when tabulating `f̄₁`.
pub const TABLE_MARGIN: f64 = 0.2;

/// `f̄₁` on a rectangular lattice with multilinear interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftTable {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// nodes per axis, each at least 2
    pub counts: Vec<usize>,
    /// node-major (first axis slowest), `m` values per node
    pub values: Vec<f64>,
}

impl DriftTable {
    /// Tabulates by Monte Carlo over invariant samples at each node. Node `i`
    /// uses seed `stream_seed(seed, i)`.
    pub fn build(
        model: &dyn SlowFastModel,
        lo: &[f64],
        hi: &[f64],
        counts: &[usize],
        settings: &InvariantSettings,
        seed: u64,
    ) -> Result<Self> {
        let m = model.dims().m;
        if lo.len() != m || hi.len() != m || counts.len() != m {
            return Err(param("table", format!("box and counts need {m} components")));
        }
        if lo.iter().zip(hi).any(|(a, b)| !(a < b)) || counts.iter().any(|&c| c < 2) {
            return Err(param("table", "need lo < hi and at least 2 nodes per axis"));
        }
        let total: usize = counts.iter().product();
        let nodes: Vec<Vec<f64>> = (0..total).map(|i| node_point(lo, hi, counts, i)).collect();
        let vals: Result<Vec<Vec<f64>>> = nodes
            .par_iter()
            .enumerate()
            .map(|(i, x)| {
                let est = estimate_invariant_measure(model, x, settings, stream_seed(seed, i as u64))?;
                Ok(averaged_drift(model, x, DriftSource::Estimate(&est))?.value)
            })
            .collect();
        Ok(Self { lo: lo.to_vec(), hi: hi.to_vec(), counts: counts.to_vec(), values: vals?.concat() })
    }

    /// Tabulates over the box spanned by `visited` widened by [`TABLE_MARGIN`].
    pub fn around(model: &dyn SlowFastModel, visited: &Path, nodes_per_axis: usize, settings: &InvariantSettings, seed: u64) -> Result<Self> {
        let m = visited.dim;
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for p in visited.values.chunks(m) {
            for a in 0..m {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        for a in 0..m {
            let w = (hi[a] - lo[a]).max(1e-3);
            lo[a] -= TABLE_MARGIN * w;
            hi[a] += TABLE_MARGIN * w;
        }
        Self::build(model, &lo, &hi, &vec![nodes_per_axis; m], settings, seed)
    }

    fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.dim();
        let mut base = 0usize;
        let mut frac = vec![0.0; m];
        let mut strides = vec![1usize; m];
        for a in (0..m.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.counts[a + 1];
        }
        for a in 0..m {
            let tol = 1e-12 * (self.hi[a] - self.lo[a]);
            if !(x[a] >= self.lo[a] - tol && x[a] <= self.hi[a] + tol) {
                return Err(param(
                    "x",
                    format!("state {x:?} outside the tabulated box [{:?}, {:?}]", self.lo, self.hi),
                ));
            }
            let cells = (self.counts[a] - 1) as f64;
            let s = ((x[a] - self.lo[a]) / (self.hi[a] - self.lo[a]) * cells).clamp(0.0, cells);
            let i = (s.floor() as usize).min(self.counts[a] - 2);
            frac[a] = s - i as f64;
            base += i * strides[a];
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for corner in 0..(1usize << m) {
            let mut w = 1.0;
            let mut idx = base;
            for a in 0..m {
                if corner >> a & 1 == 1 {
                    w *= frac[a];
                    idx += strides[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&self.values[idx * m..(idx + 1) * m]) {
                *o += w * v;
            }
        }
        Ok(())
    }
}

fn node_point(lo: &[f64], hi: &[f64], counts: &[usize], mut i: usize) -> Vec<f64> {
    let m = lo.len();
    let mut x = vec![0.0; m];
    for a in (0..m).rev() {
        let k = i % counts[a];
        i /= counts[a];
        x[a] = lo[a] + (hi[a] - lo[a]) * k as f64 / (counts[a] - 1) as f64;
    }
    x
}

/// Source of the averaged drift used by the effective dynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EffectiveDrift {
    /// The model's registered closed form.
    Analytic,
    Table(DriftTable),
}

impl EffectiveDrift {
    pub fn eval(&self, model: &dyn SlowFastModel, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            EffectiveDrift::Analytic => {
                if model.analytic_averaged_drift(x, out) {
                    Ok(())
                } else {
                    Err(param("drift", format!("model `{}` has no analytic averaged drift", model.name())))
                }
            }
            EffectiveDrift::Table(t) => t.eval(x, out),
        }
    }

    /// Central-difference Jacobian, `m × m` row-major.
    pub fn jacobian(&self, model: &dyn SlowFastModel, x: &[f64], out: &mut [f64]) -> Result<()> {
        let m = x.len();
        let mut xp = x.to_vec();
        let (mut fp, mut fm) = (vec![0.0; m], vec![0.0; m]);
        for b in 0..m {
            let step = FD_STEP * x[b].abs().max(1.0);
            xp[b] = x[b] + step;
            self.eval(model, &xp, &mut fp)?;
            xp[b] = x[b] - step;
            self.eval(model, &xp, &mut fm)?;
            xp[b] = x[b];
            for a in 0..m {
                out[a * m + b] = (fp[a] - fm[a]) / (2.0 * step);
            }
        }
        Ok(())
    }
}

/// Classical RK4 step of `ẋ = f̄₁(x)`.
pub(crate) fn rk4_step(model: &dyn SlowFastModel, drift: &EffectiveDrift, x: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
    let m = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut tmp = vec![0.0; m];
    drift.eval(model, x, &mut k1)?;
    for a in 0..m {
        tmp[a] = x[a] + 0.5 * h * k1[a];
    }
    drift.eval(model, &tmp, &mut k2)?;
    for a in 0..m {
        tmp[a] = x[a] + 0.5 * h * k2[a];
    }
    drift.eval(model, &tmp, &mut k3)?;
    for a in 0..m {
        tmp[a] = x[a] + h * k3[a];
    }
    drift.eval(model, &tmp, &mut k4)?;
    for a in 0..m {
        out[a] = x[a] + h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    }
    Ok(())
}

fn matmul(m: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..m {
        for j in 0..m {
            out[i * m + j] = (0..m).map(|k| a[i * m + k] * b[k * m + j]).sum();
        }
    }
}

/// Jacobian of [`rk4_step`] with respect to `x`, `m × m`, by the chain rule
/// through the stages.
pub(crate) fn rk4_jacobian(model: &dyn SlowFastModel, drift: &EffectiveDrift, x: &[f64], h: f64, out: &mut [f64]) -> Result<()> {
    let m = x.len();
    let mut k = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    let mut df = vec![0.0; m * m];
    let mut inner = vec![0.0; m * m];
    let mut js: Vec<Vec<f64>> = Vec::with_capacity(4);
    // stage 1
    drift.eval(model, x, &mut k)?;
    drift.jacobian(model, x, &mut df)?;
    js.push(df.clone());
    for (c, frac) in [0.5, 0.5, 1.0].into_iter().enumerate() {
        for a in 0..m {
            tmp[a] = x[a] + frac * h * k[a];
        }
        let prev = &js[c];
        for i in 0..m {
            for j in 0..m {
                inner[i * m + j] = if i == j { 1.0 } else { 0.0 } + frac * h * prev[i * m + j];
            }
        }
        drift.jacobian(model, &tmp, &mut df)?;
        let mut jn = vec![0.0; m * m];
        matmul(m, &df, &inner, &mut jn);
        js.push(jn);
        drift.eval(model, &tmp, &mut k)?;
    }
    for i in 0..m {
        for j in 0..m {
            let id = if i == j { 1.0 } else { 0.0 };
            out[i * m + j] = id + h / 6.0 * (js[0][i * m + j] + 2.0 * js[1][i * m + j] + 2.0 * js[2][i * m + j] + js[3][i * m + j]);
        }
    }
    Ok(())
}

/// Skeleton / effective dynamics
/// `X_{k+1} = Φ_h(X_k) + σ₁(X_k) (u_{k+1} − u_k)`,
/// with `Φ_h` one RK4 step of `ẋ = f̄₁(x)`. With `u = None` (or `u ≡ 0`) this
/// is the effective ODE. Only the fractional control enters, so the result
/// does not depend on `v`.
pub fn integrate_effective(
    model: &dyn SlowFastModel,
    drift: &EffectiveDrift,
    x0: &[f64],
    grid: &TimeGrid,
    u: Option<&Path>,
) -> Result<Path> {
    let ModelDims { m, d, .. } = model.dims();
    if x0.len() != m {
        return Err(param("x0", format!("expected {m} components")));
    }
    if let Some(u) = u {
        if u.grid != *grid || u.dim != d {
            return Err(param("u", "control path shape does not match grid and model"));
        }
    }
    let n = grid.n_steps;
    let h = grid.h();
    let mut values = Vec::with_capacity((n + 1) * m);
    values.extend_from_slice(x0);
    let mut x = x0.to_vec();
    let mut next = vec![0.0; m];
    let mut s = vec![0.0; m * d];
    for k in 0..n {
        rk4_step(model, drift, &x, h, &mut next)?;
        if let Some(u) = u {
            let (u0, u1) = (u.at(k), u.at(k + 1));
            model.sigma1(&x, &mut s);
            for a in 0..m {
                for j in 0..d {
                    next[a] += s[a * d + j] * (u1[j] - u0[j]);
                }
            }
        }
        guard(k + 1, &next)?;
        std::mem::swap(&mut x, &mut next);
        values.extend_from_slice(&x);
    }
    Path::new(*grid, m, values)
}
