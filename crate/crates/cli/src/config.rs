//! Experiment configuration files.
//!
//! One TOML file describes one experiment. Unknown keys are rejected, and so
//! are sections the chosen kind does not read.

use std::path::PathBuf;

use clap::ValueEnum;
use roughflow::ldp::{LdpProbe, OptimizerSettings};
use roughflow::slowfast::BuiltinModel;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Sample,
    Lift,
    SolveRde,
    Slowfast,
    Average,
    Rate,
    LdpProbe,
    WeakConv,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Sample => "sample",
            Kind::Lift => "lift",
            Kind::SolveRde => "solve-rde",
            Kind::Slowfast => "slowfast",
            Kind::Average => "average",
            Kind::Rate => "rate",
            Kind::LdpProbe => "ldp-probe",
            Kind::WeakConv => "weak-conv",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    pub kind: Kind,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub hurst: f64,
    pub grid: GridConfig,
    pub model: Option<BuiltinModel>,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    pub drift: Option<DriftConfig>,
    pub scales: Option<ScalesConfig>,
    pub mc: Option<McConfig>,
    pub sweep: Option<SweepConfig>,
    pub sample: Option<SampleConfig>,
    pub lift: Option<LiftConfig>,
    pub rde: Option<RdeConfig>,
    pub rate: Option<RateConfig>,
    pub ldp_probe: Option<LdpProbe>,
    pub weak: Option<WeakConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    pub n_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriftConfig {
    Analytic,
    /// Monte Carlo table on the box `[lo, hi]` with `nodes` points per axis.
    Table { lo: Vec<f64>, hi: Vec<f64>, nodes: usize, n_samples: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesConfig {
    pub eps: f64,
    pub delta: f64,
    pub block: Option<f64>,
    pub micro_steps: Option<usize>,
    pub eps_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_mc: usize,
}

/// Parameter grid of an averaging sweep; every combination is one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub block: Option<Vec<f64>>,
    pub n_mc: Vec<usize>,
    pub micro_steps: Option<usize>,
    pub eps_ratio: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub d: usize,
    pub e: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftConfig {
    pub d: usize,
    pub e: usize,
    pub refine: Option<usize>,
    /// Hölder exponent of the reported norms; defaults to `alpha`.
    pub exponent: Option<f64>,
}

/// Affine field `f(y) = A y + a`, `σ_{·j}(y) = S_j y + s_{·j}` driven by a
/// `d`-dimensional fBm lift dilated by `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdeConfig {
    pub y0: Vec<f64>,
    pub drift_matrix: Vec<Vec<f64>>,
    pub drift_offset: Option<Vec<f64>>,
    /// `d` matrices, each `m × m`
    pub sigma_matrices: Vec<Vec<Vec<f64>>>,
    /// `m × d`
    pub sigma_offset: Option<Vec<Vec<f64>>>,
    pub eps: Option<f64>,
    pub refine: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    Terminal { point: Vec<f64> },
    /// Tube of `radius` around the straight line from `x0` to `endpoint`.
    Tube { radius: f64, endpoint: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub target: TargetConfig,
    pub optimizer: Option<OptimizerSettings>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DeltaRule {
    /// `δ = ratio · ε`
    Ratio(f64),
    /// `δ = ε^power`
    Power(f64),
}

impl DeltaRule {
    pub fn delta(self, eps: f64) -> f64 {
        match self {
            DeltaRule::Ratio(r) => r * eps,
            DeltaRule::Power(p) => eps.powf(p),
        }
    }
}

/// Constant control family `(udot, vdot)` for every `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakConfig {
    pub eps_list: Vec<f64>,
    pub delta: DeltaRule,
    pub eps_ratio: Option<f64>,
    pub udot: Vec<f64>,
    pub vdot: Vec<f64>,
    pub n_mc: usize,
}

/// Parses a configuration, naming the key path of any schema violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::config("<syntax>", e.to_string().trim().to_string()))?;
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(path, e.into_inner().message().trim().to_string())
    })?;
    cfg.check_sections()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

impl ExperimentConfig {
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut add = |name, on: bool| {
            if on {
                v.push(name)
            }
        };
        add("model", self.model.is_some());
        add("x0", self.x0.is_some());
        add("y0", self.y0.is_some());
        add("drift", self.drift.is_some());
        add("scales", self.scales.is_some());
        add("mc", self.mc.is_some());
        add("sweep", self.sweep.is_some());
        add("sample", self.sample.is_some());
        add("lift", self.lift.is_some());
        add("rde", self.rde.is_some());
        add("rate", self.rate.is_some());
        add("ldp_probe", self.ldp_probe.is_some());
        add("weak", self.weak.is_some());
        v
    }

    /// (required, optional) sections per kind.
    fn sections(&self) -> (Vec<&'static str>, Vec<&'static str>) {
        match self.kind {
            Kind::Sample => (vec!["sample"], vec![]),
            Kind::Lift => (vec!["lift"], vec![]),
            Kind::SolveRde => (vec!["rde"], vec![]),
            Kind::Slowfast => (vec!["model", "x0", "y0", "scales"], vec!["drift"]),
            Kind::Average if self.sweep.is_some() => (vec!["model", "x0", "y0", "sweep"], vec!["drift"]),
            Kind::Average => (vec!["model", "x0", "y0", "scales", "mc"], vec!["drift"]),
            Kind::Rate => (vec!["model", "x0", "rate"], vec!["drift"]),
            Kind::LdpProbe => (vec!["model", "x0", "y0", "ldp_probe"], vec!["drift", "rate"]),
            Kind::WeakConv => (vec!["model", "x0", "y0", "weak"], vec!["drift"]),
        }
    }

    fn check_sections(&self) -> Result<(), CliError> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::config("format_version", format!("expected {FORMAT_VERSION}, found {}", self.format_version)));
        }
        let (required, optional) = self.sections();
        let present = self.present();
        for r in &required {
            if !present.contains(r) {
                return Err(CliError::config(*r, format!("required by kind `{}`", self.kind.as_str())));
            }
        }
        for p in &present {
            if !required.contains(p) && !optional.contains(p) {
                return Err(CliError::config(*p, format!("not used by kind `{}`", self.kind.as_str())));
            }
        }
        Ok(())
    }
}
