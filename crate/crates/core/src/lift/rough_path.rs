use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::grid::TimeGrid;

/// Fine-grid increments a lift was built from, kept so that translations can
/// recompute cross integrals at the resolution of the original lift.
///
/// Per fine cell with increment `δ` the area rule is: `½ δ_i δ_j` when both
/// indices are below `geometric_dim` (geometric block), `δ_i δ_j` when `i` is
/// Itô-labelled and `j` geometric, and `0` otherwise (left-point Itô sums).
#[derive(Clone, Debug, PartialEq)]
pub struct FineData {
    pub refine: usize,
    pub geometric_dim: usize,
    pub inc: Vec<f64>,
}

impl FineData {
    pub fn cell_area(&self, delta: &[f64], out: &mut [f64]) {
        cell_area(delta, self.geometric_dim, out)
    }
}

pub(crate) fn cell_area(delta: &[f64], geo: usize, out: &mut [f64]) {
    let dim = delta.len();
    for i in 0..dim {
        for j in 0..dim {
            out[i * dim + j] = match (i < geo, j < geo) {
                (true, true) => 0.5 * delta[i] * delta[j],
                (false, true) => delta[i] * delta[j],
                _ => 0.0,
            };
        }
    }
}

/// Level-2 rough path stored as per-step increments and areas.
///
/// Values over longer intervals exist only through Chen composition, so the
/// multiplicative property holds by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "Envelope", try_from = "Envelope")]
pub struct Level2RoughPath {
    pub grid: TimeGrid,
    pub dim: usize,
    /// `n × dim`
    pub inc: Vec<f64>,
    /// `n × dim × dim`, entry `(i, j)` is `∫ x^i dx^j` over the step
    pub area: Vec<f64>,
    pub(crate) fine: Option<Arc<FineData>>,
}

/// JSON layout: `inc[k][i]`, `area[k][i][j]`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    grid: TimeGrid,
    dim: usize,
    inc: Vec<Vec<f64>>,
    area: Vec<Vec<Vec<f64>>>,
}

impl From<Level2RoughPath> for Envelope {
    fn from(rp: Level2RoughPath) -> Self {
        let (n, d) = (rp.grid.n_steps, rp.dim);
        let inc = (0..n).map(|k| rp.step_inc(k).to_vec()).collect();
        let area = (0..n)
            .map(|k| (0..d).map(|i| rp.step_area(k)[i * d..(i + 1) * d].to_vec()).collect())
            .collect();
        Envelope { grid: rp.grid, dim: d, inc, area }
    }
}

impl TryFrom<Envelope> for Level2RoughPath {
    type Error = crate::error::Error;

    fn try_from(e: Envelope) -> Result<Self> {
        let d = e.dim;
        if e.inc.iter().any(|v| v.len() != d) || e.area.iter().any(|m| m.len() != d || m.iter().any(|r| r.len() != d)) {
            return Err(param("rough_path", "ragged increment or area arrays"));
        }
        let inc = e.inc.concat();
        let area = e.area.into_iter().flatten().flatten().collect();
        Level2RoughPath::new(e.grid, d, inc, area)
    }
}

impl PartialEq for Level2RoughPath {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.dim == other.dim && self.inc == other.inc && self.area == other.area
    }
}

impl Level2RoughPath {
    pub fn new(grid: TimeGrid, dim: usize, inc: Vec<f64>, area: Vec<f64>) -> Result<Self> {
        let n = grid.n_steps;
        if inc.len() != n * dim || area.len() != n * dim * dim {
            return Err(param("rough_path", "increment or area length does not match grid and dim"));
        }
        Ok(Self { grid, dim, inc, area, fine: None })
    }

    pub fn zero(grid: TimeGrid, dim: usize) -> Self {
        let n = grid.n_steps;
        Self { grid, dim, inc: vec![0.0; n * dim], area: vec![0.0; n * dim * dim], fine: None }
    }

    pub fn fine(&self) -> Option<&FineData> {
        self.fine.as_deref()
    }

    pub fn step_inc(&self, k: usize) -> &[f64] {
        &self.inc[k * self.dim..(k + 1) * self.dim]
    }

    pub fn step_area(&self, k: usize) -> &[f64] {
        let d2 = self.dim * self.dim;
        &self.area[k * d2..(k + 1) * d2]
    }

    /// `(Ξ¹_{t_s,t_t}, Ξ²_{t_s,t_t})` by Chen composition of steps `s..t`.
    pub fn compose(&self, s: usize, t: usize) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut x1 = vec![0.0; d];
        let mut x2 = vec![0.0; d * d];
        for k in s..t {
            chen_push(&mut x1, &mut x2, self.step_inc(k), self.step_area(k));
        }
        (x1, x2)
    }

    pub fn increment(&self, s: usize, t: usize) -> Vec<f64> {
        self.compose(s, t).0
    }

    pub fn level2(&self, s: usize, t: usize) -> Vec<f64> {
        self.compose(s, t).1
    }

    /// Steps `k0..k1` as a rough path on a grid starting at zero.
    pub fn window(&self, k0: usize, k1: usize) -> Result<Self> {
        let grid = self.grid.window(k0, k1)?;
        let d = self.dim;
        let fine = self.fine.as_ref().map(|f| {
            let r = f.refine;
            Arc::new(FineData {
                refine: r,
                geometric_dim: f.geometric_dim,
                inc: f.inc[k0 * r * d..k1 * r * d].to_vec(),
            })
        });
        Ok(Self {
            grid,
            dim: d,
            inc: self.inc[k0 * d..k1 * d].to_vec(),
            area: self.area[k0 * d * d..k1 * d * d].to_vec(),
            fine,
        })
    }

    /// Components in `range` with their mutual areas.
    pub fn sub_block(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.dim || range.start > range.end {
            return Err(param("sub_block", format!("{range:?} outside 0..{}", self.dim)));
        }
        let (d, nd) = (self.dim, range.len());
        let n = self.grid.n_steps;
        let mut inc = Vec::with_capacity(n * nd);
        let mut area = Vec::with_capacity(n * nd * nd);
        for k in 0..n {
            inc.extend_from_slice(&self.step_inc(k)[range.clone()]);
            let a = self.step_area(k);
            for i in range.clone() {
                area.extend_from_slice(&a[i * d + range.start..i * d + range.end]);
            }
        }
        let fine = self.fine.as_ref().map(|f| {
            let m = n * f.refine;
            let mut finc = Vec::with_capacity(m * nd);
            for c in 0..m {
                finc.extend_from_slice(&f.inc[c * d + range.start..c * d + range.end]);
            }
            let geo = f.geometric_dim.clamp(range.start, range.end) - range.start;
            Arc::new(FineData { refine: f.refine, geometric_dim: geo, inc: finc })
        });
        Ok(Self { grid: self.grid, dim: nd, inc, area, fine })
    }
}

/// Appends one step to a running `(Ξ¹, Ξ²)`:
/// `Ξ² ← Ξ² + a + Ξ¹ ⊗ δ`, `Ξ¹ ← Ξ¹ + δ`.
#[inline]
pub fn chen_push(x1: &mut [f64], x2: &mut [f64], delta: &[f64], a: &[f64]) {
    let d = x1.len();
    for i in 0..d {
        for j in 0..d {
            x2[i * d + j] += a[i * d + j] + x1[i] * delta[j];
        }
    }
    for i in 0..d {
        x1[i] += delta[i];
    }
}

/// Dilation `εΞ = (√ε Ξ¹, ε Ξ²)`.
pub fn dilate(base: &Level2RoughPath, eps: f64) -> Result<Level2RoughPath> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(param("eps", format!("dilation needs eps > 0, got {eps}")));
    }
    let s = eps.sqrt();
    let fine = base.fine.as_ref().map(|f| {
        Arc::new(FineData {
            refine: f.refine,
            geometric_dim: f.geometric_dim,
            inc: f.inc.iter().map(|x| s * x).collect(),
        })
    });
    Ok(Level2RoughPath {
        grid: base.grid,
        dim: base.dim,
        inc: base.inc.iter().map(|x| s * x).collect(),
        area: base.area.iter().map(|x| eps * x).collect(),
        fine,
    })
}
