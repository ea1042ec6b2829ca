use serde::{Deserialize, Serialize};

use crate::drivers::toeplitz::solve_symmetric_toeplitz;
use crate::drivers::{fgn_autocovariance, CameronMartinControl, ControlPaths, VolterraKernel};
use crate::error::{param, Result};
use crate::grid::Path;
use crate::par::try_replicate;
use crate::slowfast::{ExperimentSetup, ScaleParams};
use crate::stats::mean_se;

/// Smallest Monte Carlo size accepted by [`mc_probability`].
pub const MIN_MC: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Plain,
    ImportanceSampled,
}

/// Tube-probability probe over a list of `ε` with `δ = delta_ratio · ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpProbe {
    pub eps_list: Vec<f64>,
    pub delta_ratio: f64,
    pub n_mc: usize,
    /// sup-norm tube radius; `f64::INFINITY` is allowed
    pub radius: f64,
    pub estimator: Estimator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub eps: f64,
    pub delta: f64,
    pub estimator: Estimator,
    pub n_mc: usize,
    /// replicas whose slow path stayed in the tube
    pub hits: usize,
    pub p_hat: f64,
    pub stderr: f64,
    /// `−ε log p̂`, absent when there were no hits
    pub neg_eps_log_p: Option<f64>,
    /// delta-method standard error `ε · stderr / p̂`
    pub log_stderr: Option<f64>,
    /// one-sided 95% upper bound `3 / n_mc` when there were no hits
    pub p_upper: Option<f64>,
}

/// Estimates `P(sup_t |X^{ε,δ}_t − reference_t| < radius)` for each `ε`.
///
/// The plain estimator counts hits under the original law. The weighted
/// estimator simulates with the fractional driver shifted by `tilt/√ε` and
/// multiplies each hit by the Gaussian likelihood ratio of the shifted
/// increments, `exp(−⟨Σ⁻¹δ, z⟩ − ½⟨Σ⁻¹δ, δ⟩)`, where `z` are the sampled
/// fractional Gaussian noise increments, `δ` the increments of `tilt/√ε`
/// and `Σ` their Toeplitz covariance. Replica seeds are shared across `ε`.
pub fn mc_probability(
    setup: &ExperimentSetup<'_>,
    probe: &LdpProbe,
    reference: &Path,
    tilt: Option<&CameronMartinControl>,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    let dims = setup.model.dims();
    if reference.grid != setup.grid || reference.dim != dims.m {
        return Err(param("reference", "reference path does not match grid and slow dimension"));
    }
    if !(probe.radius > 0.0) {
        return Err(param("radius", "tube radius must be positive"));
    }
    if !(probe.delta_ratio > 0.0 && probe.delta_ratio <= 0.1) {
        return Err(param("delta_ratio", "need 0 < delta_ratio <= 0.1"));
    }
    if probe.eps_list.is_empty() {
        return Err(param("eps_list", "empty"));
    }
    let n_mc = probe.n_mc;
    if probe.radius == f64::INFINITY {
        return Ok(probe
            .eps_list
            .iter()
            .map(|&eps| ProbeRow {
                eps,
                delta: probe.delta_ratio * eps,
                estimator: probe.estimator,
                n_mc,
                hits: n_mc,
                p_hat: 1.0,
                stderr: 0.0,
                neg_eps_log_p: Some(0.0),
                log_stderr: Some(0.0),
                p_upper: None,
            })
            .collect());
    }
    if n_mc < MIN_MC {
        return Err(param("n_mc", format!("need at least {MIN_MC} replicas")));
    }
    let tilt_paths = match (probe.estimator, tilt) {
        (Estimator::Plain, _) => None,
        (Estimator::ImportanceSampled, None) => return Err(param("tilt", "importance sampling needs a tilt control")),
        (Estimator::ImportanceSampled, Some(c)) => {
            if c.grid != setup.grid || c.d != dims.d || c.hurst != setup.hurst.h {
                return Err(param("tilt", "tilt control does not match grid, Hurst index or fBm dimension"));
            }
            let kernel = VolterraKernel::new(&setup.grid, setup.hurst.h)?;
            let zero_v = CameronMartinControl::new(c.grid, c.hurst, c.d, dims.e, c.udot.clone(), vec![0.0; c.grid.n_steps * dims.e])?;
            Some(ControlPaths::new(zero_v, &kernel)?)
        }
    };
    let (n, d) = (setup.grid.n_steps, dims.d);
    let h = setup.grid.h();
    let acov: Vec<f64> = (0..n).map(|k| h.powf(2.0 * setup.hurst.h) * fgn_autocovariance(k, setup.hurst.h)).collect();
    let sampler = setup.sampler()?;
    let mut rows = Vec::with_capacity(probe.eps_list.len());
    for &eps in &probe.eps_list {
        let scales = ScaleParams::new(eps, probe.delta_ratio * eps, &setup.grid, setup.hurst.beta)?;
        // per component: δ_c and x_c = Σ⁻¹ δ_c, with the constant ½⟨x_c, δ_c⟩
        let weights = match &tilt_paths {
            None => None,
            Some(tp) => {
                let inc = tp.u.increments();
                let mut xs = Vec::with_capacity(d);
                let mut quad = 0.0;
                for c in 0..d {
                    let delta: Vec<f64> = (0..n).map(|k| inc[k * d + c] / eps.sqrt()).collect();
                    let x = solve_symmetric_toeplitz(&acov, &delta)?;
                    quad += 0.5 * x.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
                    xs.push(x);
                }
                Some((xs, quad))
            }
        };
        let samples = try_replicate(n_mc, seed, |_, s| {
            let driver = sampler.sample(s);
            let run = crate::slowfast::integrate_slowfast(
                setup.model,
                &scales,
                &setup.x0,
                &setup.y0,
                &driver,
                tilt_paths.as_ref(),
                s,
            )?;
            let inside = run.slow.path().sup_distance(reference)? < probe.radius;
            if !inside {
                return Ok(0.0);
            }
            Ok(match &weights {
                None => 1.0,
                Some((xs, quad)) => {
                    let z = driver.bh.increments();
                    let mut lin = 0.0;
                    for (c, x) in xs.iter().enumerate() {
                        for k in 0..n {
                            lin += x[k] * z[k * d + c];
                        }
                    }
                    (-lin - quad).exp()
                }
            })
        })?;
        let hits = samples.iter().filter(|v| **v > 0.0).count();
        let (p_hat, stderr) = mean_se(&samples);
        // a weighted mean can overshoot 1 only through extreme weights
        let p_hat = p_hat.min(1.0);
        let row = if hits == 0 {
            ProbeRow {
                eps,
                delta: scales.delta,
                estimator: probe.estimator,
                n_mc,
                hits,
                p_hat: 0.0,
                stderr: 0.0,
                neg_eps_log_p: None,
                log_stderr: None,
                p_upper: Some(3.0 / n_mc as f64),
            }
        } else {
            ProbeRow {
                eps,
                delta: scales.delta,
                estimator: probe.estimator,
                n_mc,
                hits,
                p_hat,
                stderr,
                neg_eps_log_p: Some(-eps * p_hat.ln()),
                log_stderr: Some(eps * stderr / p_hat),
                p_upper: None,
            }
        };
        rows.push(row);
    }
    Ok(rows)
}
