use std::sync::Arc;

use rayon::prelude::*;

use super::rough_path::{cell_area, chen_push, FineData, Level2RoughPath};
use crate::drivers::{cm_to_path, CameronMartinControl, MixedDriverPath, VolterraKernel};
use crate::error::{param, Error, Result};
use crate::grid::Path;

/// Upper bound on stored fine-grid entries (about 2 GiB of f64).
const MAX_FINE_ENTRIES: usize = 1 << 28;

/// Compresses fine cells into coarse steps by Chen's relation.
fn compress(fine_inc: &[f64], dim: usize, refine: usize, n: usize, geo: usize) -> (Vec<f64>, Vec<f64>) {
    let d2 = dim * dim;
    let mut inc = vec![0.0; n * dim];
    let mut area = vec![0.0; n * d2];
    inc.par_chunks_mut(dim.max(1))
        .zip(area.par_chunks_mut(d2.max(1)))
        .enumerate()
        .for_each(|(k, (x1, x2))| {
            let mut cell = vec![0.0; d2];
            for c in k * refine..(k + 1) * refine {
                let delta = &fine_inc[c * dim..(c + 1) * dim];
                cell_area(delta, geo, &mut cell);
                chen_push(x1, x2, delta, &cell);
            }
        });
    if dim == 0 {
        return (vec![], vec![]);
    }
    (inc, area)
}

fn check_size(entries: usize) -> Result<()> {
    if entries > MAX_FINE_ENTRIES {
        return Err(Error::Resource(format!(
            "lift would store {entries} fine-grid values (limit {MAX_FINE_ENTRIES})"
        )));
    }
    Ok(())
}

/// Level-2 lift of a mixed driver sampled on a grid `refine` times finer than
/// the returned one.
///
/// Per fine cell the fBm block carries the geometric area `½δ⊗δ`, the
/// Brownian block and `I[b, w]` use left-point (Itô) sums, and `I[w, b]`
/// follows from `w ⊗ b − ∫ dw ⊗ b`. Cells are composed into coarse steps.
pub fn lift_mixed(path: &MixedDriverPath, refine: usize) -> Result<Level2RoughPath> {
    if refine == 0 || !refine.is_power_of_two() {
        return Err(param("refine", format!("must be a power of two, got {refine}")));
    }
    let coarse = path.grid.coarsen(refine)?;
    let (d, e) = (path.d(), path.e());
    let dim = d + e;
    let m = path.grid.n_steps;
    check_size(m * dim)?;
    check_size(coarse.n_steps * dim * dim)?;
    let joined = Path::stack(&path.bh, &path.w)?;
    let fine_inc = joined.increments();
    let (inc, area) = compress(&fine_inc, dim, refine, coarse.n_steps, d);
    Ok(Level2RoughPath {
        grid: coarse,
        dim,
        inc,
        area,
        fine: Some(Arc::new(FineData { refine, geometric_dim: d, inc: fine_inc })),
    })
}

/// Geometric lift of the piecewise-linear interpolation of `path`, built on
/// a grid `refine` times finer and compressed.
pub fn lift_piecewise_linear(path: &Path, refine: usize) -> Result<Level2RoughPath> {
    if refine == 0 || !refine.is_power_of_two() {
        return Err(param("refine", format!("must be a power of two, got {refine}")));
    }
    let coarse = path.grid.coarsen(refine)?;
    let dim = path.dim;
    let fine_inc = path.increments();
    let (inc, area) = compress(&fine_inc, dim, refine, coarse.n_steps, dim);
    Ok(Level2RoughPath {
        grid: coarse,
        dim,
        inc,
        area,
        fine: Some(Arc::new(FineData { refine, geometric_dim: dim, inc: fine_inc })),
    })
}

/// Lift of a Cameron–Martin element `(u, v)`; all blocks are Young integrals
/// of piecewise-linear paths, evaluated exactly by the trapezoid rule.
pub fn lift_cm(ctrl: &CameronMartinControl, kernel: &VolterraKernel) -> Result<Level2RoughPath> {
    let (u, v) = cm_to_path(ctrl, kernel)?;
    lift_piecewise_linear(&Path::stack(&u, &v)?, 1)
}

/// Translation `T^h(Ξ)` of a lift in the direction of the control `h`.
///
/// First level is `Ξ¹ + h`; per fine cell the area is the base area plus the
/// trapezoid Young sums `½(δx⊗δh + δh⊗δx + δh⊗δh)`, which covers every cross
/// integral between driver and control blocks and the control's own area.
/// The control is interpolated linearly between coarse grid points.
pub fn translate(base: &Level2RoughPath, ctrl: &CameronMartinControl, kernel: &VolterraKernel) -> Result<Level2RoughPath> {
    let (u, v) = cm_to_path(ctrl, kernel)?;
    translate_by_path(base, &Path::stack(&u, &v)?)
}

/// [`translate`] with an explicit control path `h` on the base grid.
pub fn translate_by_path(base: &Level2RoughPath, h: &Path) -> Result<Level2RoughPath> {
    if h.dim != base.dim {
        return Err(param("control", format!("control has {} components, rough path {}", h.dim, base.dim)));
    }
    if h.grid != base.grid {
        return Err(param("control", "control and rough path use different grids"));
    }
    let fine = base
        .fine()
        .ok_or_else(|| param("base", "translation needs a lift that retains fine-grid data"))?;
    let (dim, r, n) = (base.dim, fine.refine, base.grid.n_steps);
    let d2 = dim * dim;
    let hinc = h.increments();
    let inv_r = 1.0 / r as f64;
    let mut inc = vec![0.0; n * dim];
    let mut area = vec![0.0; n * d2];
    if dim > 0 {
        inc.par_chunks_mut(dim)
            .zip(area.par_chunks_mut(d2))
            .enumerate()
            .for_each(|(k, (x1, x2))| {
                let dh: Vec<f64> = hinc[k * dim..(k + 1) * dim].iter().map(|x| x * inv_r).collect();
                let mut cell = vec![0.0; d2];
                let mut delta = vec![0.0; dim];
                for c in k * r..(k + 1) * r {
                    let dx = &fine.inc[c * dim..(c + 1) * dim];
                    fine.cell_area(dx, &mut cell);
                    for i in 0..dim {
                        for j in 0..dim {
                            cell[i * dim + j] += 0.5 * (dx[i] * dh[j] + dh[i] * dx[j] + dh[i] * dh[j]);
                        }
                    }
                    for i in 0..dim {
                        delta[i] = dx[i] + dh[i];
                    }
                    chen_push(x1, x2, &delta, &cell);
                }
                // keep the first level exactly equal to base + control
                for i in 0..dim {
                    x1[i] = base.inc[k * dim + i] + hinc[k * dim + i];
                }
            });
    }
    Ok(Level2RoughPath { grid: base.grid, dim, inc, area, fine: None })
}
