use serde::{Deserialize, Serialize};

use super::model::{ModelDims, SlowFastModel};
use crate::error::{param, Result};
use crate::grid::Trajectory;
use crate::rde::guard;
use crate::rng::{normal, rng_from_seed, Rng};
use crate::stats::{autocovariance, batch_means_se, slope};

/// Default Euler–Maruyama step of the frozen fast chain.
pub const DEFAULT_MICRO_H: f64 = 0.01;

/// Frozen fast Euler–Maruyama stepper `dY = f₂(x, Y) dt + σ₂(x, Y) dw`.
struct FrozenChain<'a> {
    model: &'a dyn SlowFastModel,
    x: &'a [f64],
    y: Vec<f64>,
    f2: Vec<f64>,
    s2: Vec<f64>,
    dw: Vec<f64>,
    h: f64,
    sq: f64,
    steps: usize,
}

impl<'a> FrozenChain<'a> {
    fn new(model: &'a dyn SlowFastModel, x: &'a [f64], y0: &[f64], h: f64) -> Self {
        let ModelDims { n, e, .. } = model.dims();
        Self {
            model,
            x,
            y: y0.to_vec(),
            f2: vec![0.0; n],
            s2: vec![0.0; n * e],
            dw: vec![0.0; e],
            h,
            sq: h.sqrt(),
            steps: 0,
        }
    }

    fn step(&mut self, rng: &mut Rng) -> Result<()> {
        let e = self.dw.len();
        self.model.f2(self.x, &self.y, &mut self.f2);
        self.model.sigma2(self.x, &self.y, &mut self.s2);
        for w in self.dw.iter_mut() {
            *w = self.sq * normal(rng);
        }
        for (r, yr) in self.y.iter_mut().enumerate() {
            let mut v = *yr + self.f2[r] * self.h;
            for c in 0..e {
                v += self.s2[r * e + c] * self.dw[c];
            }
            *yr = v;
        }
        self.steps += 1;
        guard(self.steps, &self.y)
    }

    fn advance(&mut self, k: usize, rng: &mut Rng) -> Result<()> {
        for _ in 0..k {
            self.step(rng)?;
        }
        Ok(())
    }
}

fn check_frozen(model: &dyn SlowFastModel, x: &[f64], y0: &[f64], micro_h: f64) -> Result<()> {
    let ModelDims { m, n, .. } = model.dims();
    if x.len() != m {
        return Err(param("x", format!("expected {m} components")));
    }
    if y0.len() != n {
        return Err(param("y0", format!("expected {n} components")));
    }
    if !(micro_h > 0.0 && micro_h.is_finite()) {
        return Err(param("micro_h", "must be positive"));
    }
    let c = model.constants();
    if !(c.beta1 > 0.0 && c.beta2 > 0.0) {
        return Err(param("model", "dissipativity constants must be positive"));
    }
    Ok(())
}

/// Euler–Maruyama path of the fast equation with the slow state frozen at
/// `x`, on unit time scale (no `δ`).
pub fn frozen_fast(model: &dyn SlowFastModel, x: &[f64], y0: &[f64], horizon: f64, micro_h: f64, seed: u64) -> Result<Trajectory> {
    check_frozen(model, x, y0, micro_h)?;
    let steps = (horizon / micro_h).round() as usize;
    let n = y0.len();
    let mut rng = rng_from_seed(seed);
    let mut chain = FrozenChain::new(model, x, y0, micro_h);
    let mut values = Vec::with_capacity((steps + 1) * n);
    values.extend_from_slice(y0);
    for _ in 0..steps {
        chain.step(&mut rng)?;
        values.extend_from_slice(&chain.y);
    }
    Ok(Trajectory { dt: micro_h, dim: n, values })
}

/// Controls of [`estimate_invariant_measure`]. Unset times default to
/// `5/β₂` (burn-in) and `2/β₂` (thinning interval).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantSettings {
    pub n_samples: usize,
    #[serde(default)]
    pub burn_in: Option<f64>,
    #[serde(default)]
    pub thin: Option<f64>,
    #[serde(default = "default_micro_h")]
    pub micro_h: f64,
    /// Chain start; the origin if unset.
    #[serde(default)]
    pub y0: Option<Vec<f64>>,
}

fn default_micro_h() -> f64 {
    DEFAULT_MICRO_H
}

impl InvariantSettings {
    pub fn new(n_samples: usize) -> Self {
        Self { n_samples, burn_in: None, thin: None, micro_h: DEFAULT_MICRO_H, y0: None }
    }
}

/// Moments of the invariant law `μ_x` of the frozen fast process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantMeasureEstimate {
    pub frozen_x: Vec<f64>,
    pub mean: Vec<f64>,
    /// `n × n`, symmetric
    pub cov: Vec<f64>,
    /// batch-means standard error of each mean component
    pub mean_se: Vec<f64>,
    pub n_samples: usize,
    pub burn_in: f64,
    pub thin: f64,
    pub micro_h: f64,
    /// thinned states, `n_samples × n`
    pub samples: Vec<f64>,
    /// set when the two halves of the chain disagree by more than 5 SE
    pub warning: Option<String>,
}

/// Moments of `μ_x` from one long chain, after burn-in and thinning.
pub fn estimate_invariant_measure(
    model: &dyn SlowFastModel,
    x: &[f64],
    settings: &InvariantSettings,
    seed: u64,
) -> Result<InvariantMeasureEstimate> {
    let n = model.dims().n;
    let y0 = settings.y0.clone().unwrap_or_else(|| vec![0.0; n]);
    check_frozen(model, x, &y0, settings.micro_h)?;
    if settings.n_samples < 4 {
        return Err(param("n_samples", "need at least 4 samples"));
    }
    let beta2 = model.constants().beta2;
    let burn_in = settings.burn_in.unwrap_or(5.0 / beta2);
    let thin = settings.thin.unwrap_or(2.0 / beta2);
    if !(burn_in >= 0.0) || !(thin > 0.0) {
        return Err(param("burn_in", "burn-in must be non-negative and thinning positive"));
    }
    let h = settings.micro_h;
    let thin_steps = ((thin / h).round() as usize).max(1);
    let mut rng = rng_from_seed(seed);
    let mut chain = FrozenChain::new(model, x, &y0, h);
    chain.advance((burn_in / h).round() as usize, &mut rng)?;
    let ns = settings.n_samples;
    let mut samples = Vec::with_capacity(ns * n);
    for _ in 0..ns {
        chain.advance(thin_steps, &mut rng)?;
        samples.extend_from_slice(&chain.y);
    }
    let mut mean = vec![0.0; n];
    for s in samples.chunks(n) {
        for r in 0..n {
            mean[r] += s[r];
        }
    }
    mean.iter_mut().for_each(|v| *v /= ns as f64);
    let mut cov = vec![0.0; n * n];
    for s in samples.chunks(n) {
        for r in 0..n {
            for c in 0..n {
                cov[r * n + c] += (s[r] - mean[r]) * (s[c] - mean[c]);
            }
        }
    }
    cov.iter_mut().for_each(|v| *v /= (ns - 1) as f64);
    let batches = 20.min(ns / 2).max(2);
    let mut mean_se = Vec::with_capacity(n);
    let mut warning = None;
    for r in 0..n {
        let comp: Vec<f64> = samples.chunks(n).map(|s| s[r]).collect();
        let se = batch_means_se(&comp, batches);
        mean_se.push(se);
        let half = ns / 2;
        let m1 = comp[..half].iter().sum::<f64>() / half as f64;
        let m2 = comp[half..].iter().sum::<f64>() / (ns - half) as f64;
        // a transient inflates the full-chain SE, so scale from the later half
        let late_se = batch_means_se(&comp[half..], (batches / 2).max(2));
        let gap_se = 2f64.sqrt() * late_se;
        if (m1 - m2).abs() > 5.0 * gap_se && warning.is_none() {
            warning = Some(format!("component {r}: half-chain means {m1:.4} and {m2:.4} differ by more than 5 SE; chain may not have mixed"));
        }
    }
    Ok(InvariantMeasureEstimate {
        frozen_x: x.to_vec(),
        mean,
        cov,
        mean_se,
        n_samples: ns,
        burn_in,
        thin,
        micro_h: h,
        samples,
        warning,
    })
}

/// Averaged drift `f̄₁(x)` with a per-component standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Where `f̄₁` comes from.
#[derive(Clone, Copy, Debug)]
pub enum DriftSource<'a> {
    /// The model's registered closed form.
    Analytic,
    /// Monte Carlo over invariant samples; must be frozen at the same `x`.
    Estimate(&'a InvariantMeasureEstimate),
}

/// `f̄₁(x) = ∫ f₁(x, y) μ_x(dy)`.
pub fn averaged_drift(model: &dyn SlowFastModel, x: &[f64], source: DriftSource<'_>) -> Result<DriftEstimate> {
    let ModelDims { m, n, .. } = model.dims();
    if x.len() != m {
        return Err(param("x", format!("expected {m} components")));
    }
    match source {
        DriftSource::Analytic => {
            let mut value = vec![0.0; m];
            if !model.analytic_averaged_drift(x, &mut value) {
                return Err(param("drift", format!("model `{}` has no analytic averaged drift", model.name())));
            }
            Ok(DriftEstimate { value, stderr: vec![0.0; m] })
        }
        DriftSource::Estimate(est) => {
            if est.frozen_x != x {
                return Err(param("estimate", format!("estimate frozen at {:?}, requested x = {x:?}", est.frozen_x)));
            }
            let ns = est.n_samples;
            let mut vals = vec![0.0; ns * m];
            for (i, y) in est.samples.chunks(n).enumerate() {
                model.f1(x, y, &mut vals[i * m..(i + 1) * m]);
            }
            let batches = 20.min(ns / 2).max(2);
            let mut value = Vec::with_capacity(m);
            let mut stderr = Vec::with_capacity(m);
            for a in 0..m {
                let comp: Vec<f64> = vals.chunks(m).map(|v| v[a]).collect();
                value.push(comp.iter().sum::<f64>() / ns as f64);
                stderr.push(batch_means_se(&comp, batches));
            }
            Ok(DriftEstimate { value, stderr })
        }
    }
}

/// Exponential decay rate of the autocovariance of the first fast component
/// in stationarity.
///
/// The chain is run for `horizon` time units after a `5/β₂` burn-in and
/// recorded every `0.05/β₂`; `ln C(τ)` is fitted by least squares over lags
/// `τ ≤ 2/β₂`.
pub fn autocovariance_decay_rate(model: &dyn SlowFastModel, x: &[f64], horizon: f64, micro_h: f64, seed: u64) -> Result<f64> {
    let n = model.dims().n;
    let y0 = vec![0.0; n];
    check_frozen(model, x, &y0, micro_h)?;
    let beta2 = model.constants().beta2;
    let rec = ((0.05 / beta2 / micro_h).round() as usize).max(1);
    let lag_dt = rec as f64 * micro_h;
    let mut rng = rng_from_seed(seed);
    let mut chain = FrozenChain::new(model, x, &y0, micro_h);
    chain.advance((5.0 / beta2 / micro_h).round() as usize, &mut rng)?;
    let count = (horizon / lag_dt).round() as usize;
    let mut series = Vec::with_capacity(count);
    for _ in 0..count {
        chain.advance(rec, &mut rng)?;
        series.push(chain.y[0]);
    }
    let max_lag = ((2.0 / beta2) / lag_dt).round() as usize;
    if series.len() <= 10 * max_lag {
        return Err(param("horizon", "too short for the autocovariance fit"));
    }
    let acov = autocovariance(&series, max_lag);
    let (mut ts, mut ls) = (Vec::new(), Vec::new());
    for (l, c) in acov.iter().enumerate() {
        if *c <= 0.0 {
            break;
        }
        ts.push(l as f64 * lag_dt);
        ls.push(c.ln());
    }
    if ts.len() < 3 {
        return Err(param("horizon", "autocovariance not positive at short lags"));
    }
    Ok(-slope(&ts, &ls))
}
