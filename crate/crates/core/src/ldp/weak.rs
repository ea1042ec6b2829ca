use serde::{Deserialize, Serialize};

use super::problem::skeleton;
use crate::drivers::{CameronMartinControl, ControlPaths, VolterraKernel};
use crate::error::{param, Result};
use crate::par::try_replicate;
use crate::slowfast::{rows_from, ExperimentSetup, ScaleParams, TrendRow};

pub const WEAK_PROXY: &str = "weak_proxy";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakConvergenceReport {
    pub rows: Vec<TrendRow>,
    /// values strictly decrease down the table
    pub strictly_decreasing: bool,
}

/// `E[min(1, ‖X̃^{ε,δ} − X̃‖_∞)]` across scale settings.
///
/// `X̃^{ε,δ}` is the controlled slow component driven by `family(scales)`
/// and `X̃` the skeleton of `limit`. Replica seeds are shared across rows,
/// as in the averaging experiment, so the zero control reproduces its
/// `sup_error_bounded` column.
pub fn weak_convergence_probe(
    setup: &ExperimentSetup<'_>,
    scales_list: &[ScaleParams],
    family: &(dyn Fn(&ScaleParams) -> Result<CameronMartinControl> + Sync),
    limit: &CameronMartinControl,
    n_mc: usize,
    seed: u64,
) -> Result<WeakConvergenceReport> {
    if scales_list.is_empty() || n_mc < 2 {
        return Err(param("n_mc", "need at least one scale setting and two replicas"));
    }
    let kernel = VolterraKernel::new(&setup.grid, setup.hurst.h)?;
    let target = skeleton(setup.model, &setup.drift, &setup.x0, &ControlPaths::new(limit.clone(), &kernel)?)?;
    let ctrls: Vec<ControlPaths> = scales_list
        .iter()
        .map(|sc| ControlPaths::new(family(sc)?, &kernel))
        .collect::<Result<_>>()?;
    let sampler = setup.sampler()?;
    let samples = try_replicate(n_mc, seed, |_, s| {
        scales_list
            .iter()
            .zip(&ctrls)
            .map(|(sc, c)| {
                let run = setup.replica(&sampler, sc, Some(c), s)?;
                Ok(run.slow.path().sup_distance(&target)?.min(1.0))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let rows = rows_from(scales_list, &[WEAK_PROXY], &samples, n_mc);
    let strictly_decreasing = rows.windows(2).all(|w| w[1].value < w[0].value);
    Ok(WeakConvergenceReport { rows, strictly_decreasing })
}
