use std::collections::BTreeMap;
use std::path::{Path as FsPath, PathBuf};
use std::time::Instant;

use roughflow::drivers::{sample_mixed, CameronMartinControl};
use roughflow::io::{to_json, write_control_csv, write_path_csv, write_probe_csv, write_trend_csv};
use roughflow::ldp::{mc_probability, solve_rate, weak_convergence_probe, Estimator, RateProblem, RateResult, Target};
use roughflow::lift::{dilate, holder_norms, lift_mixed};
use roughflow::rde::{solve_rde, FnField};
use roughflow::rng::stream_seed;
use roughflow::slowfast::{averaging_experiment, integrate_effective, DriftTable, EffectiveDrift, ExperimentSetup, InvariantSettings, ScaleParams};
use roughflow::{HurstParam, Path, TimeGrid};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{DriftConfig, ExperimentConfig, Kind, ScalesConfig, TargetConfig, FORMAT_VERSION};
use crate::error::{at, CliError};
use crate::sweep::run_sweep;

/// Stream index of the drift table's seed, away from replica indices.
const DRIFT_STREAM: u64 = u64::MAX - 1;

/// How `u_star` is parameterised; the rate value does not depend on it.
const CONTROL_REPRESENTATION: &str =
    "udot piecewise constant per step; u_t = int_0^t K_H(t,s) udot_s ds (Volterra kernel); energy = 0.5 * int |udot|^2 dt";

pub const DEFAULT_OUT: &str = "roughflow-out";

/// Command-line overrides; each wins over the file.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub kind: Kind,
    pub code_version: String,
    /// SHA-256 of the parsed configuration in canonical JSON form
    pub config_sha256: String,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub wall_clock_seconds: f64,
    pub artifacts: Vec<Artifact>,
    /// every parameter that was filled in rather than read from the file
    pub defaults: BTreeMap<String, Value>,
}

pub(crate) type Defaults = BTreeMap<String, Value>;
pub(crate) type Files = Vec<(String, Vec<u8>)>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

/// Runs one experiment and writes its artifacts, then `manifest.json`.
/// Nothing is written when the run fails.
pub fn run(kind: Kind, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    if kind != cfg.kind {
        return Err(CliError::config("kind", format!("file describes `{}`, command asked for `{}`", cfg.kind.as_str(), kind.as_str())));
    }
    let mut defaults = Defaults::new();
    let seed = opts
        .seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::config("seed", "missing; set it in the file or pass --seed"))?;
    let workers = opts.workers.or(cfg.workers);
    if workers == Some(0) {
        return Err(CliError::config("workers", "must be at least 1"));
    }
    let out = match opts.out.clone().or_else(|| cfg.out.clone()) {
        Some(o) => o,
        None => {
            defaults.insert("out".into(), json!(DEFAULT_OUT));
            PathBuf::from(DEFAULT_OUT)
        }
    };
    let files = roughflow::par::with_workers(workers, || compute(cfg, seed, &mut defaults))??;
    let artifacts = write_all(&out, &files)?;
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        kind,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(cfg),
        seed,
        workers,
        out: out.clone(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        artifacts,
        defaults,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(roughflow::Error::from)?;
    write_file(&out.join("manifest.json"), text.as_bytes())?;
    Ok(manifest)
}

fn write_file(path: &FsPath, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_all(out: &FsPath, files: &Files) -> Result<Vec<Artifact>, CliError> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Io { path: out.to_path_buf(), source })?;
    let mut arts = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        write_file(&out.join(name), bytes)?;
        arts.push(Artifact { file: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
    }
    Ok(arts)
}

fn csv_path(p: &Path) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_path_csv(p, &mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = to_json(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

pub(crate) fn grid_of(cfg: &ExperimentConfig) -> Result<TimeGrid, CliError> {
    TimeGrid::new(cfg.grid.horizon, cfg.grid.n_steps).map_err(at("grid"))
}

pub(crate) fn hurst_of(cfg: &ExperimentConfig) -> Result<HurstParam, CliError> {
    HurstParam::new(cfg.hurst).map_err(|e| match e {
        roughflow::Error::Param { reason, .. } => CliError::config("hurst", reason),
        other => other.into(),
    })
}

pub(crate) fn scales_of(s: &ScalesConfig, grid: &TimeGrid, beta: f64, prefix: &str, defaults: &mut Defaults) -> Result<ScaleParams, CliError> {
    let sc = ScaleParams::with(s.eps, s.delta, s.block, s.micro_steps, s.eps_ratio, grid, beta).map_err(|e| match e {
        roughflow::Error::Param { field, reason } => CliError::config(format!("{prefix}.{field}"), reason),
        other => other.into(),
    })?;
    if s.block.is_none() {
        defaults.insert(format!("{prefix}.block"), json!(sc.block));
    }
    if s.micro_steps.is_none() {
        defaults.insert(format!("{prefix}.micro_steps"), json!(sc.micro_steps));
    }
    if s.eps_ratio.is_none() {
        defaults.insert(format!("{prefix}.eps_ratio"), json!(sc.eps_ratio));
    }
    Ok(sc)
}

/// Builds the shared experiment inputs of the model-based kinds.
pub(crate) fn setup_of<'a>(cfg: &'a ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<ExperimentSetup<'a>, CliError> {
    let model = cfg.model.as_ref().expect("checked by the schema").as_model();
    let dims = model.dims();
    let x0 = cfg.x0.clone().expect("checked by the schema");
    if x0.len() != dims.m {
        return Err(CliError::config("x0", format!("model `{}` has slow dimension {}", model.name(), dims.m)));
    }
    let y0 = match &cfg.y0 {
        Some(y) if y.len() != dims.n => return Err(CliError::config("y0", format!("model `{}` has fast dimension {}", model.name(), dims.n))),
        Some(y) => y.clone(),
        None => vec![0.0; dims.n],
    };
    let grid = grid_of(cfg)?;
    let hurst = hurst_of(cfg)?;
    let drift = match &cfg.drift {
        None => {
            defaults.insert("drift.kind".into(), json!("analytic"));
            EffectiveDrift::Analytic
        }
        Some(DriftConfig::Analytic) => EffectiveDrift::Analytic,
        Some(DriftConfig::Table { lo, hi, nodes, n_samples }) => {
            let beta2 = model.constants().beta2;
            let settings = InvariantSettings::new(*n_samples);
            defaults.insert("drift.burn_in".into(), json!(5.0 / beta2));
            defaults.insert("drift.thin".into(), json!(2.0 / beta2));
            defaults.insert("drift.micro_h".into(), json!(settings.micro_h));
            let counts = vec![*nodes; dims.m];
            EffectiveDrift::Table(DriftTable::build(model, lo, hi, &counts, &settings, stream_seed(seed, DRIFT_STREAM)).map_err(at("drift"))?)
        }
    };
    Ok(ExperimentSetup { model, hurst, grid, x0, y0, drift })
}

fn compute(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    match cfg.kind {
        Kind::Sample => sample(cfg, seed),
        Kind::Lift => lift(cfg, seed, defaults),
        Kind::SolveRde => solve(cfg, seed, defaults),
        Kind::Slowfast => slowfast(cfg, seed, defaults),
        Kind::Average if cfg.sweep.is_some() => run_sweep(cfg, seed, defaults),
        Kind::Average => average(cfg, seed, defaults),
        Kind::Rate => rate(cfg, seed, defaults),
        Kind::LdpProbe => ldp_probe(cfg, seed, defaults),
        Kind::WeakConv => weak(cfg, seed, defaults),
    }
}

fn sample(cfg: &ExperimentConfig, seed: u64) -> Result<Files, CliError> {
    let s = cfg.sample.expect("checked by the schema");
    let mp = sample_mixed(&grid_of(cfg)?, &hurst_of(cfg)?, s.d, s.e, seed).map_err(at("sample"))?;
    let mut files = vec![("fbm.csv".to_string(), csv_path(&mp.bh)?)];
    if s.e > 0 {
        files.push(("bm.csv".to_string(), csv_path(&mp.w)?));
    }
    Ok(files)
}

fn lift(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let l = cfg.lift.expect("checked by the schema");
    let hurst = hurst_of(cfg)?;
    let refine = l.refine.unwrap_or_else(|| {
        defaults.insert("lift.refine".into(), json!(1));
        1
    });
    let exponent = l.exponent.unwrap_or_else(|| {
        defaults.insert("lift.exponent".into(), json!(hurst.alpha));
        hurst.alpha
    });
    let mp = sample_mixed(&grid_of(cfg)?, &hurst, l.d, l.e, seed).map_err(at("lift"))?;
    let rp = lift_mixed(&mp, refine).map_err(at("lift"))?;
    let norms = holder_norms(&rp, exponent).map_err(at("lift"))?;
    Ok(vec![("rough_path.json".into(), json_bytes(&rp)?), ("holder.json".into(), json_bytes(&norms)?)])
}

fn solve(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let r = cfg.rde.as_ref().expect("checked by the schema");
    let m = r.y0.len();
    let d = r.sigma_matrices.len();
    if m == 0 {
        return Err(CliError::config("rde.y0", "empty"));
    }
    if d == 0 {
        return Err(CliError::config("rde.sigma_matrices", "need at least one driver component"));
    }
    let square = |mat: &Vec<Vec<f64>>| mat.len() == m && mat.iter().all(|row| row.len() == m);
    if !square(&r.drift_matrix) {
        return Err(CliError::config("rde.drift_matrix", format!("must be {m} × {m}")));
    }
    if let Some(j) = r.sigma_matrices.iter().position(|s| !square(s)) {
        return Err(CliError::config(format!("rde.sigma_matrices[{j}]"), format!("must be {m} × {m}")));
    }
    let a_off = r.drift_offset.clone().unwrap_or_else(|| vec![0.0; m]);
    if a_off.len() != m {
        return Err(CliError::config("rde.drift_offset", format!("need {m} entries")));
    }
    let s_off = r.sigma_offset.clone().unwrap_or_else(|| vec![vec![0.0; d]; m]);
    if s_off.len() != m || s_off.iter().any(|row| row.len() != d) {
        return Err(CliError::config("rde.sigma_offset", format!("must be {m} × {d}")));
    }
    for (key, missing) in [("rde.drift_offset", r.drift_offset.is_none()), ("rde.sigma_offset", r.sigma_offset.is_none())] {
        if missing {
            defaults.insert(key.into(), json!("zeros"));
        }
    }
    let eps = r.eps.unwrap_or_else(|| {
        defaults.insert("rde.eps".into(), json!(1.0));
        1.0
    });
    let refine = r.refine.unwrap_or_else(|| {
        defaults.insert("rde.refine".into(), json!(1));
        1
    });

    let a = r.drift_matrix.clone();
    let s = r.sigma_matrices.clone();
    let s2 = s.clone();
    let field = FnField::new(
        m,
        d,
        move |y: &[f64], o: &mut [f64]| {
            for i in 0..m {
                o[i] = a_off[i] + (0..m).map(|k| a[i][k] * y[k]).sum::<f64>();
            }
        },
        move |y: &[f64], o: &mut [f64]| {
            for i in 0..m {
                for j in 0..d {
                    o[i * d + j] = s_off[i][j] + (0..m).map(|k| s[j][i][k] * y[k]).sum::<f64>();
                }
            }
        },
    )
    .with_dsigma(move |_y: &[f64], o: &mut [f64]| {
        // [i][j][k] = ∂_k σ_{ij}
        for i in 0..m {
            for j in 0..d {
                for k in 0..m {
                    o[(i * d + j) * m + k] = s2[j][i][k];
                }
            }
        }
    });

    let mp = sample_mixed(&grid_of(cfg)?, &hurst_of(cfg)?, d, 0, seed).map_err(at("rde"))?;
    let mut rp = lift_mixed(&mp, refine).map_err(at("rde"))?;
    if eps != 1.0 {
        rp = dilate(&rp, eps).map_err(at("rde"))?;
    }
    let sol = solve_rde(&field, &rp, &r.y0).map_err(at("rde"))?;
    let summary = json!({ "terminal": sol.terminal() });
    Ok(vec![("solution.csv".into(), csv_path(&sol.path())?), ("summary.json".into(), json_bytes(&summary)?)])
}

fn slowfast(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let setup = setup_of(cfg, seed, defaults)?;
    let sc = scales_of(cfg.scales.as_ref().expect("checked by the schema"), &setup.grid, setup.hurst.beta, "scales", defaults)?;
    let sampler = setup.sampler().map_err(at("model"))?;
    let run = setup.replica(&sampler, &sc, None, seed).map_err(at("scales"))?;
    let xbar = integrate_effective(setup.model, &setup.drift, &setup.x0, &setup.grid, None).map_err(at("drift"))?;
    let slow = run.slow.path();
    let summary = json!({
        "sup_error": slow.sup_distance(&xbar)?,
        "block": sc.block,
        "micro_steps": sc.micro_steps,
    });
    Ok(vec![
        ("slow.csv".into(), csv_path(&slow)?),
        ("fast.csv".into(), csv_path(&run.fast)?),
        ("effective.csv".into(), csv_path(&xbar)?),
        ("summary.json".into(), json_bytes(&summary)?),
    ])
}

fn average(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let setup = setup_of(cfg, seed, defaults)?;
    let sc = scales_of(cfg.scales.as_ref().expect("checked by the schema"), &setup.grid, setup.hurst.beta, "scales", defaults)?;
    let n_mc = cfg.mc.expect("checked by the schema").n_mc;
    let rows = averaging_experiment(&setup, &[sc], n_mc, seed).map_err(at("mc"))?;
    let mut buf = Vec::new();
    write_trend_csv(&rows, &mut buf)?;
    Ok(vec![("trend.csv".into(), buf)])
}

fn rate_problem<'a>(cfg: &'a ExperimentConfig, setup: &ExperimentSetup<'a>, seed: u64, defaults: &mut Defaults) -> Result<RateProblem<'a>, CliError> {
    let rc = cfg.rate.as_ref().expect("checked by the schema");
    let m = setup.x0.len();
    let target = match &rc.target {
        TargetConfig::Terminal { point } => {
            if point.len() != m {
                return Err(CliError::config("rate.target.point", format!("need {m} entries")));
            }
            Target::Terminal(point.clone())
        }
        TargetConfig::Tube { radius, endpoint } => {
            if endpoint.len() != m {
                return Err(CliError::config("rate.target.endpoint", format!("need {m} entries")));
            }
            let (x0, t_end) = (setup.x0.clone(), setup.grid.horizon);
            let end = endpoint.clone();
            let path = Path::from_fn(setup.grid, m, move |t| (0..m).map(|i| x0[i] + (end[i] - x0[i]) * t / t_end).collect());
            Target::Tube { path, radius: *radius }
        }
    };
    let mut settings = rc.optimizer.clone().unwrap_or_default();
    if rc.optimizer.is_none() {
        settings.seed = seed;
    }
    // serde fills missing optimizer keys, so echo the resolved block in full
    defaults.insert("rate.optimizer".into(), serde_json::to_value(&settings).map_err(roughflow::Error::from)?);
    defaults.insert("rate.control_representation".into(), CONTROL_REPRESENTATION.into());
    Ok(RateProblem {
        model: setup.model,
        drift: setup.drift.clone(),
        hurst: setup.hurst.h,
        grid: setup.grid,
        x0: setup.x0.clone(),
        target,
        settings,
        candidates: Vec::new(),
    })
}

fn rate_files(res: &RateResult) -> Result<Files, CliError> {
    let mut ctrl = Vec::new();
    write_control_csv(&res.u_star, &mut ctrl)?;
    Ok(vec![
        ("rate.json".into(), json_bytes(res)?),
        ("u_star.csv".into(), ctrl),
        ("skeleton.csv".into(), csv_path(&res.skeleton)?),
    ])
}

fn rate(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let setup = setup_of(cfg, seed, defaults)?;
    let problem = rate_problem(cfg, &setup, seed, defaults)?;
    let res = solve_rate(&problem).map_err(at("rate"))?;
    rate_files(&res)
}

fn ldp_probe(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let setup = setup_of(cfg, seed, defaults)?;
    let probe = cfg.ldp_probe.as_ref().expect("checked by the schema");
    let mut files = Files::new();
    let (reference, tilt) = match cfg.rate {
        Some(_) => {
            let problem = rate_problem(cfg, &setup, seed, defaults)?;
            let res = solve_rate(&problem).map_err(at("rate"))?;
            files.extend(rate_files(&res)?);
            // a tube target is itself the event; a terminal one is probed around the optimal path
            let reference = match &problem.target {
                Target::Tube { path, .. } => path.clone(),
                Target::Terminal(_) => res.skeleton.clone(),
            };
            (reference, Some(res.u_star))
        }
        None => {
            if probe.estimator == Estimator::ImportanceSampled {
                return Err(CliError::config("ldp_probe.estimator", "importance sampling needs a [rate] section for the tilt"));
            }
            defaults.insert("ldp_probe.reference".into(), json!("effective"));
            let xbar = integrate_effective(setup.model, &setup.drift, &setup.x0, &setup.grid, None).map_err(at("drift"))?;
            (xbar, None)
        }
    };
    let rows = mc_probability(&setup, probe, &reference, tilt.as_ref(), seed).map_err(at("ldp_probe"))?;
    let mut buf = Vec::new();
    write_probe_csv(&rows, &mut buf)?;
    files.push(("probe.csv".into(), buf));
    files.push(("reference.csv".into(), csv_path(&reference)?));
    Ok(files)
}

fn weak(cfg: &ExperimentConfig, seed: u64, defaults: &mut Defaults) -> Result<Files, CliError> {
    let setup = setup_of(cfg, seed, defaults)?;
    let w = cfg.weak.as_ref().expect("checked by the schema");
    let dims = setup.model.dims();
    let n = setup.grid.n_steps;
    if w.udot.len() != dims.d {
        return Err(CliError::config("weak.udot", format!("need {} entries", dims.d)));
    }
    if w.vdot.len() != dims.e {
        return Err(CliError::config("weak.vdot", format!("need {} entries", dims.e)));
    }
    let ctrl = CameronMartinControl::new(setup.grid, setup.hurst.h, dims.d, dims.e, w.udot.repeat(n), w.vdot.repeat(n)).map_err(at("weak"))?;
    let mut scales = Vec::with_capacity(w.eps_list.len());
    for (i, &eps) in w.eps_list.iter().enumerate() {
        let s = ScalesConfig { eps, delta: w.delta.delta(eps), block: None, micro_steps: None, eps_ratio: w.eps_ratio };
        scales.push(scales_of(&s, &setup.grid, setup.hurst.beta, &format!("weak.eps_list[{i}]"), defaults)?);
    }
    let report = weak_convergence_probe(&setup, &scales, &|_| Ok(ctrl.clone()), &ctrl, w.n_mc, seed).map_err(at("weak"))?;
    let mut buf = Vec::new();
    write_trend_csv(&report.rows, &mut buf)?;
    let summary = json!({ "strictly_decreasing": report.strictly_decreasing });
    Ok(vec![("weak.csv".into(), buf), ("summary.json".into(), json_bytes(&summary)?)])
}
