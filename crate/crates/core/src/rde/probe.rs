//! Distances between controlled paths and the empirical local-Lipschitz probe
//! of the solution map.

use serde::{Deserialize, Serialize};

use super::solver::{solve_rde, ControlledPath};
use super::vector_field::VectorField;
use crate::error::{param, Result};
use crate::lift::holder::two_param_holder;
use crate::lift::{rough_distance_with, HolderMethod, Level2RoughPath};

fn check_pair(a: &ControlledPath, b: &ControlledPath) -> Result<()> {
    if a.grid != b.grid || a.state_dim != b.state_dim || a.noise_dim != b.noise_dim {
        return Err(param("controlled_path", "paths live on different grids or dimensions"));
    }
    Ok(())
}

/// Running prefix sums of the driver increments, `(n+1) × d`.
fn driver_prefix(p: &ControlledPath) -> Vec<f64> {
    let (n, d) = (p.grid.n_steps, p.noise_dim);
    let mut out = vec![0.0; (n + 1) * d];
    for k in 0..n {
        for j in 0..d {
            out[(k + 1) * d + j] = out[k * d + j] + p.driver_inc[k * d + j];
        }
    }
    out
}

fn remainder_at(p: &ControlledPath, prefix: &[f64], s: usize, t: usize, out: &mut [f64]) {
    let (m, d) = (p.state_dim, p.noise_dim);
    let (ys, yt, g) = (p.y(s), p.y(t), p.ydag(s));
    for a in 0..m {
        let mut v = yt[a] - ys[a];
        for j in 0..d {
            v -= g[a * d + j] * (prefix[t * d + j] - prefix[s * d + j]);
        }
        out[a] = v;
    }
}

/// `‖Y† − Ỹ†‖_α + ‖R^Y − R^Ỹ‖_{2α}` over all grid pairs.
pub fn controlled_distance(a: &ControlledPath, b: &ControlledPath, exponent: f64) -> Result<f64> {
    check_pair(a, b)?;
    let (n, h, m) = (a.grid.n_steps, a.grid.h(), a.state_dim);
    let g = two_param_holder(n, h, exponent, |s, t| {
        a.ydag(t)
            .iter()
            .zip(a.ydag(s))
            .zip(b.ydag(t).iter().zip(b.ydag(s)))
            .map(|((at, as_), (bt, bs))| {
                let v = (at - as_) - (bt - bs);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    });
    let (pa, pb) = (driver_prefix(a), driver_prefix(b));
    let (mut ra, mut rb) = (vec![0.0; m], vec![0.0; m]);
    let r = two_param_holder(n, h, 2.0 * exponent, |s, t| {
        remainder_at(a, &pa, s, t, &mut ra);
        remainder_at(b, &pb, s, t, &mut rb);
        ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    });
    Ok(g + r)
}

/// `|Y_0 − Ỹ_0| + ‖Y − Ỹ‖_β`.
pub fn solution_distance(a: &ControlledPath, b: &ControlledPath, exponent: f64) -> Result<f64> {
    check_pair(a, b)?;
    let (n, h) = (a.grid.n_steps, a.grid.h());
    let start: f64 = a.y(0).iter().zip(b.y(0)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let hold = two_param_holder(n, h, exponent, |s, t| {
        a.y(t)
            .iter()
            .zip(a.y(s))
            .zip(b.y(t).iter().zip(b.y(s)))
            .map(|((at, as_), (bt, bs))| {
                let v = (at - as_) - (bt - bs);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    });
    Ok(start + hold)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `|Ψ_0 − Ψ̃_0| + ‖Ψ − Ψ̃‖_β`
    pub solution_distance: f64,
    /// `d_{Ξ,Ξ̃,2β}`
    pub controlled_distance: f64,
    /// `|ξ − ξ̃| + ρ_α(Ξ, Ξ̃)`
    pub input_distance: f64,
    /// `(solution_distance + controlled_distance) / input_distance`
    pub ratio: f64,
}

/// Solves with both inputs and compares output and input distances.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_probe<V: VectorField + ?Sized>(
    vf: &V,
    driver_a: &Level2RoughPath,
    driver_b: &Level2RoughPath,
    y0_a: &[f64],
    y0_b: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<LipschitzReport> {
    let pa = solve_rde(vf, driver_a, y0_a)?;
    let pb = solve_rde(vf, driver_b, y0_b)?;
    let sol = solution_distance(&pa, &pb, beta)?;
    let ctl = controlled_distance(&pa, &pb, beta)?;
    let start: f64 = y0_a.iter().zip(y0_b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let input = start + rough_distance_with(driver_a, driver_b, alpha, HolderMethod::Exact)?;
    let ratio = if input > 0.0 { (sol + ctl) / input } else if sol + ctl == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(LipschitzReport { solution_distance: sol, controlled_distance: ctl, input_distance: input, ratio })
}
