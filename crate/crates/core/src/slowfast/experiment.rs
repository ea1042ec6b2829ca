use serde::{Deserialize, Serialize};

use super::effective::{integrate_effective, EffectiveDrift};
use super::integrate::{auxiliary_fast, integrate_slowfast, ScaleParams, SlowFastPath};
use super::model::SlowFastModel;
use crate::drivers::{ControlPaths, MixedSampler};
use crate::error::{param, Result};
use crate::grid::{HurstParam, Path, TimeGrid};
use crate::lift::path_holder;
use crate::par::try_replicate;
use crate::stats::mean_se;

/// One row of a trend table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "Delta")]
    pub block: f64,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    pub n_mc: usize,
}

/// Shared inputs of the Monte Carlo experiments.
pub struct ExperimentSetup<'a> {
    pub model: &'a dyn SlowFastModel,
    pub hurst: HurstParam,
    pub grid: TimeGrid,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub drift: EffectiveDrift,
}

impl ExperimentSetup<'_> {
    /// Driver sampler for this setup's grid and dimensions.
    pub fn sampler(&self) -> Result<MixedSampler> {
        let dims = self.model.dims();
        MixedSampler::new(&self.grid, &self.hurst, dims.d, dims.e)
    }

    /// One replica: driver and micro noise both keyed by `replica_seed`.
    pub fn replica(
        &self,
        sampler: &MixedSampler,
        scales: &ScaleParams,
        ctrl: Option<&ControlPaths>,
        replica_seed: u64,
    ) -> Result<SlowFastPath> {
        let driver = sampler.sample(replica_seed);
        integrate_slowfast(self.model, scales, &self.x0, &self.y0, &driver, ctrl, replica_seed)
    }

    /// Effective ODE path `X̄`.
    pub fn averaged_path(&self) -> Result<Path> {
        integrate_effective(self.model, &self.drift, &self.x0, &self.grid, None)
    }
}

pub const SUP_ERROR: &str = "sup_error";
pub const SUP_ERROR_BOUNDED: &str = "sup_error_bounded";
pub const HOLDER_SQ: &str = "holder_sq";
pub const FAST_ENERGY: &str = "fast_energy";
pub const AUX_GAP: &str = "aux_gap";

/// `∫₀ᵀ |Y_t|² dt` by the trapezoidal rule on the macro grid.
pub fn fast_energy(fast: &Path) -> f64 {
    let h = fast.grid.h();
    let sq: Vec<f64> = fast.values.chunks(fast.dim).map(|y| y.iter().map(|v| v * v).sum()).collect();
    let n = sq.len() - 1;
    h * (0.5 * sq[0] + sq[1..n].iter().sum::<f64>() + 0.5 * sq[n])
}

pub(crate) fn rows_from(scales: &[ScaleParams], metrics: &[&str], samples: &[Vec<f64>], n_mc: usize) -> Vec<TrendRow> {
    let per = metrics.len();
    let mut rows = Vec::with_capacity(scales.len() * per);
    for (si, sc) in scales.iter().enumerate() {
        for (mi, name) in metrics.iter().enumerate() {
            let xs: Vec<f64> = samples.iter().map(|r| r[si * per + mi]).collect();
            let (value, stderr) = mean_se(&xs);
            rows.push(TrendRow { eps: sc.eps, delta: sc.delta, block: sc.block, metric: name.to_string(), value, stderr, n_mc });
        }
    }
    rows
}

/// Averaging trend table.
///
/// For each replica one mixed driver is drawn and reused across all scale
/// settings (common random numbers). Metrics per scale, in order:
/// `E‖X − X̄‖_∞`, `E[min(1, ‖X − X̄‖_∞)]`, `E‖X‖²_β` on the grid and
/// `∫ E|Y|² dt`.
pub fn averaging_experiment(setup: &ExperimentSetup<'_>, scales_list: &[ScaleParams], n_mc: usize, seed: u64) -> Result<Vec<TrendRow>> {
    if scales_list.is_empty() || n_mc < 2 {
        return Err(param("n_mc", "need at least one scale setting and two replicas"));
    }
    let xbar = setup.averaged_path()?;
    let beta = setup.hurst.beta;
    let sampler = setup.sampler()?;
    let samples = try_replicate(n_mc, seed, |_, s| {
        let mut out = Vec::with_capacity(scales_list.len() * 4);
        for sc in scales_list {
            let run = setup.replica(&sampler, sc, None, s)?;
            let slow = run.slow.path();
            let sup = slow.sup_distance(&xbar)?;
            let hold = path_holder(&slow, beta);
            out.extend([sup, sup.min(1.0), hold * hold, fast_energy(&run.fast)]);
        }
        Ok(out)
    })?;
    Ok(rows_from(scales_list, &[SUP_ERROR, SUP_ERROR_BOUNDED, HOLDER_SQ, FAST_ENERGY], &samples, n_mc))
}

/// Time-averaged `E|Ỹ_t − Ŷ_t|²` between the (controlled) fast component and
/// the auxiliary process with the slow state frozen on blocks of length `Δ`,
/// both driven by the same Brownian increments.
pub fn auxiliary_gap_experiment(
    setup: &ExperimentSetup<'_>,
    scales_list: &[ScaleParams],
    ctrl: Option<&ControlPaths>,
    n_mc: usize,
    seed: u64,
) -> Result<Vec<TrendRow>> {
    if scales_list.is_empty() || n_mc < 2 {
        return Err(param("n_mc", "need at least one scale setting and two replicas"));
    }
    let dims = setup.model.dims();
    let sampler = setup.sampler()?;
    let samples = try_replicate(n_mc, seed, |_, s| {
        let driver = sampler.sample(s);
        let mut out = Vec::with_capacity(scales_list.len());
        for sc in scales_list {
            let run = integrate_slowfast(setup.model, sc, &setup.x0, &setup.y0, &driver, ctrl, s)?;
            let aux = auxiliary_fast(setup.model, sc, &run.slow.path(), &driver.w, &setup.y0, s)?;
            let diff: Vec<f64> = run.fast.values.iter().zip(&aux.values).map(|(a, b)| a - b).collect();
            let gap = Path::new(setup.grid, dims.n, diff)?;
            out.push(fast_energy(&gap) / setup.grid.horizon);
        }
        Ok(out)
    })?;
    Ok(rows_from(scales_list, &[AUX_GAP], &samples, n_mc))
}
