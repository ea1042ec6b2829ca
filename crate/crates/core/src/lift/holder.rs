//! Discrete Hölder norms of rough paths, paths and two-parameter remainders.

use serde::{Deserialize, Serialize};

use super::rough_path::{chen_push, Level2RoughPath};
use crate::error::{param, Result};
use crate::grid::Path;

/// Grids above this size default to the dyadic approximation.
pub const EXACT_LIMIT: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HolderMethod {
    /// Supremum over all grid pairs, O(n²).
    Exact,
    /// Supremum over dyadic intervals only, O(n); a lower bound of `Exact`.
    Dyadic,
}

impl HolderMethod {
    pub fn auto(n_steps: usize) -> Self {
        if n_steps > EXACT_LIMIT {
            HolderMethod::Dyadic
        } else {
            HolderMethod::Exact
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub exponent: f64,
    pub first_level_norm: f64,
    pub second_level_norm: f64,
    pub triple_norm: f64,
    pub method: HolderMethod,
}

fn check_exponent(exponent: f64) -> Result<()> {
    if !(exponent > 0.0 && exponent < 0.5) {
        return Err(param("exponent", format!("Hölder exponent must lie in (0, 1/2), got {exponent}")));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `‖Ξ¹‖_α` and `‖Ξ²‖_{2α}` with the grid method chosen by size.
pub fn holder_norms(rp: &Level2RoughPath, exponent: f64) -> Result<HolderReport> {
    holder_norms_with(rp, exponent, HolderMethod::auto(rp.grid.n_steps))
}

pub fn holder_norms_with(rp: &Level2RoughPath, exponent: f64, method: HolderMethod) -> Result<HolderReport> {
    check_exponent(exponent)?;
    let (a, b) = sup_pair(rp, None, exponent, method);
    Ok(HolderReport {
        exponent,
        first_level_norm: a,
        second_level_norm: b,
        triple_norm: a + b,
        method,
    })
}

/// Inhomogeneous distance `ρ_α(a, b) = ‖a¹ − b¹‖_α + ‖a² − b²‖_{2α}`.
pub fn rough_distance(a: &Level2RoughPath, b: &Level2RoughPath, exponent: f64) -> Result<f64> {
    rough_distance_with(a, b, exponent, HolderMethod::auto(a.grid.n_steps))
}

pub fn rough_distance_with(a: &Level2RoughPath, b: &Level2RoughPath, exponent: f64, method: HolderMethod) -> Result<f64> {
    check_exponent(exponent)?;
    if a.grid != b.grid || a.dim != b.dim {
        return Err(param("rough_path", "distance needs matching grids and dimensions"));
    }
    let (x, y) = sup_pair(a, Some(b), exponent, method);
    Ok(x + y)
}

fn sup_pair(a: &Level2RoughPath, b: Option<&Level2RoughPath>, alpha: f64, method: HolderMethod) -> (f64, f64) {
    match method {
        HolderMethod::Exact => sup_exact(a, b, alpha),
        HolderMethod::Dyadic => sup_dyadic(a, b, alpha),
    }
}

fn sup_exact(a: &Level2RoughPath, b: Option<&Level2RoughPath>, alpha: f64) -> (f64, f64) {
    let (n, d, h) = (a.grid.n_steps, a.dim, a.grid.h());
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let mut ax1 = vec![0.0; d];
    let mut ax2 = vec![0.0; d * d];
    let mut bx1 = vec![0.0; d];
    let mut bx2 = vec![0.0; d * d];
    for s in 0..n {
        ax1.iter_mut().chain(ax2.iter_mut()).for_each(|x| *x = 0.0);
        bx1.iter_mut().chain(bx2.iter_mut()).for_each(|x| *x = 0.0);
        for t in s..n {
            chen_push(&mut ax1, &mut ax2, a.step_inc(t), a.step_area(t));
            let len = (t + 1 - s) as f64 * h;
            let (n1, n2) = match b {
                None => (norm(&ax1), norm(&ax2)),
                Some(b) => {
                    chen_push(&mut bx1, &mut bx2, b.step_inc(t), b.step_area(t));
                    (diff_norm(&ax1, &bx1), diff_norm(&ax2, &bx2))
                }
            };
            s1 = s1.max(n1 / len.powf(alpha));
            s2 = s2.max(n2 / len.powf(2.0 * alpha));
        }
    }
    (s1, s2)
}

fn sup_dyadic(a: &Level2RoughPath, b: Option<&Level2RoughPath>, alpha: f64) -> (f64, f64) {
    let (d, h) = (a.dim, a.grid.h());
    let d2 = d * d;
    // level-0 intervals are the steps; merge pairs upward
    let mut a1 = a.inc.clone();
    let mut a2 = a.area.clone();
    let mut b1 = b.map(|b| b.inc.clone());
    let mut b2 = b.map(|b| b.area.clone());
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    let mut count = a.grid.n_steps;
    let mut len = h;
    loop {
        for k in 0..count {
            let (n1, n2) = match (&b1, &b2) {
                (Some(x), Some(y)) => (
                    diff_norm(&a1[k * d..(k + 1) * d], &x[k * d..(k + 1) * d]),
                    diff_norm(&a2[k * d2..(k + 1) * d2], &y[k * d2..(k + 1) * d2]),
                ),
                _ => (norm(&a1[k * d..(k + 1) * d]), norm(&a2[k * d2..(k + 1) * d2])),
            };
            s1 = s1.max(n1 / len.powf(alpha));
            s2 = s2.max(n2 / len.powf(2.0 * alpha));
        }
        if count == 1 {
            break;
        }
        let merge = |x1: &mut Vec<f64>, x2: &mut Vec<f64>| {
            let half = count / 2;
            let mut n1 = vec![0.0; half * d];
            let mut n2 = vec![0.0; half * d2];
            for k in 0..half {
                let (l, r) = (2 * k, 2 * k + 1);
                let o1 = &mut n1[k * d..(k + 1) * d];
                let o2 = &mut n2[k * d2..(k + 1) * d2];
                o1.copy_from_slice(&x1[l * d..(l + 1) * d]);
                o2.copy_from_slice(&x2[l * d2..(l + 1) * d2]);
                chen_push(o1, o2, &x1[r * d..(r + 1) * d], &x2[r * d2..(r + 1) * d2]);
            }
            *x1 = n1;
            *x2 = n2;
        };
        merge(&mut a1, &mut a2);
        if let (Some(x), Some(y)) = (&mut b1, &mut b2) {
            merge(x, y);
        }
        count /= 2;
        len *= 2.0;
    }
    (s1, s2)
}

/// `sup |x_t − x_s| / (t − s)^α` over grid pairs.
pub fn path_holder(path: &Path, exponent: f64) -> f64 {
    path_holder_with(path, exponent, HolderMethod::auto(path.grid.n_steps))
}

pub fn path_holder_with(path: &Path, exponent: f64, method: HolderMethod) -> f64 {
    let (n, h) = (path.grid.n_steps, path.grid.h());
    let mut sup: f64 = 0.0;
    match method {
        HolderMethod::Exact => {
            for s in 0..n {
                for t in s + 1..=n {
                    let v = diff_norm(path.at(t), path.at(s));
                    sup = sup.max(v / ((t - s) as f64 * h).powf(exponent));
                }
            }
        }
        HolderMethod::Dyadic => {
            let mut step = 1;
            while step <= n {
                let scale = (step as f64 * h).powf(exponent);
                for k in (0..n).step_by(step) {
                    sup = sup.max(diff_norm(path.at(k + step), path.at(k)) / scale);
                }
                step *= 2;
            }
        }
    }
    sup
}

/// `sup |R_{s,t}| / (t − s)^γ` for a two-parameter function given as a
/// closure over grid indices, evaluated on all pairs.
pub fn two_param_holder(n: usize, h: f64, exponent: f64, mut r: impl FnMut(usize, usize) -> f64) -> f64 {
    let mut sup: f64 = 0.0;
    for s in 0..n {
        for t in s + 1..=n {
            sup = sup.max(r(s, t) / ((t - s) as f64 * h).powf(exponent));
        }
    }
    sup
}
