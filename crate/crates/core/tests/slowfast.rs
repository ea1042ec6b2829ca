use roughflow::drivers::{sample_mixed, CameronMartinControl, ControlPaths, VolterraKernel};
use roughflow::ldp::skeleton;
use roughflow::lift::{dilate, lift_mixed};
use roughflow::rde::{solve_rde, FnField};
use roughflow::slowfast::{
    auxiliary_fast, auxiliary_gap_experiment, autocovariance_decay_rate, averaged_drift, averaging_experiment, check_assumptions,
    estimate_invariant_measure, frozen_fast, integrate_effective, integrate_slowfast, micro_noise, DriftSource, DriftTable, EffectiveDrift,
    ExperimentSetup, InvariantSettings, LinearOu, ModelConstants, ModelDims, ScaleParams, SlowFastModel, AUX_GAP, FAST_ENERGY, HOLDER_SQ,
    SUP_ERROR,
};
use roughflow::stats::{ks_two_sample, mean_se, variance};
use roughflow::{Error, HurstParam, Path, TimeGrid};

const CONSTS: ModelConstants = ModelConstants { lipschitz: 1.0, beta1: 2.0, beta2: 1.0, growth: 2.0 };
const DIMS: ModelDims = ModelDims { m: 1, n: 1, d: 1, e: 1 };

/// `f₁ = −x`, `σ₁ = 0.5 + 0.2 sin x`, fast OU `f₂ = −y` with noise `s`.
struct Decoupled {
    s: f64,
}

impl SlowFastModel for Decoupled {
    fn name(&self) -> &str {
        "decoupled"
    }
    fn dims(&self) -> ModelDims {
        DIMS
    }
    fn constants(&self) -> ModelConstants {
        CONSTS
    }
    fn f1(&self, x: &[f64], _y: &[f64], out: &mut [f64]) {
        out[0] = -x[0];
    }
    fn f2(&self, _x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = -y[0];
    }
    fn sigma1(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.5 + 0.2 * x[0].sin();
    }
    fn dsigma1(&self, x: &[f64], out: &mut [f64]) {
        out[0] = 0.2 * x[0].cos();
    }
    fn sigma2(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out[0] = self.s;
    }
}

/// `f₁ = y²` over a fast OU with invariant law `N(0, 1)`.
struct SquareDrift;

impl SlowFastModel for SquareDrift {
    fn name(&self) -> &str {
        "square"
    }
    fn dims(&self) -> ModelDims {
        DIMS
    }
    fn constants(&self) -> ModelConstants {
        CONSTS
    }
    fn f1(&self, _x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = y[0] * y[0];
    }
    fn f2(&self, _x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = -y[0];
    }
    fn sigma1(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.1;
    }
    fn sigma2(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out[0] = 2f64.sqrt();
    }
}

fn hurst() -> HurstParam {
    HurstParam::new(0.4).unwrap()
}

fn combined_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[test]
fn fast_component_decays_without_noise() {
    let model = Decoupled { s: 0.0 };
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let driver = sample_mixed(&grid, &hurst(), 1, 1, 3).unwrap();
    let delta = 0.01;
    let scales = ScaleParams::new(0.5, delta, &grid, hurst().beta).unwrap();
    let run = integrate_slowfast(&model, &scales, &[1.0], &[2.0], &driver, None, 3).unwrap();
    let yt = run.fast.terminal()[0];
    assert!(yt.abs() <= 2.0 * (-1.0 / (2.0 * delta)).exp());
    assert!(run.fast.values.windows(2).all(|w| w[1].abs() <= w[0].abs()));
}

#[test]
fn decoupled_slow_block_matches_plain_rde() {
    let model = Decoupled { s: 1.0 };
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let driver = sample_mixed(&grid, &hurst(), 1, 1, 17).unwrap();
    let eps = 0.3;
    let scales = ScaleParams::new(eps, 0.01, &grid, hurst().beta).unwrap();
    let run = integrate_slowfast(&model, &scales, &[0.8], &[0.0], &driver, None, 17).unwrap();
    let vf = FnField::new(1, 1, |x: &[f64], o: &mut [f64]| o[0] = -x[0], |x: &[f64], o: &mut [f64]| o[0] = 0.5 + 0.2 * x[0].sin())
        .with_dsigma(|x: &[f64], o: &mut [f64]| o[0] = 0.2 * x[0].cos());
    let rp = dilate(&lift_mixed(&driver.fbm_only(), 1).unwrap(), eps).unwrap();
    let direct = solve_rde(&vf, &rp, &[0.8]).unwrap();
    for k in 0..=128 {
        assert!((run.slow.y(k)[0] - direct.y(k)[0]).abs() < 1e-10);
    }
}

#[test]
fn zero_control_is_bitwise_uncontrolled() {
    let model = LinearOu::default();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let driver = sample_mixed(&grid, &hurst(), 1, 1, 5).unwrap();
    let scales = ScaleParams::new(0.2, 0.002, &grid, hurst().beta).unwrap();
    let kernel = VolterraKernel::new(&grid, 0.4).unwrap();
    let zero = ControlPaths::new(CameronMartinControl::zeros(grid, 0.4, 1, 1), &kernel).unwrap();
    let a = integrate_slowfast(&model, &scales, &[1.0], &[0.0], &driver, None, 9).unwrap();
    let b = integrate_slowfast(&model, &scales, &[1.0], &[0.0], &driver, Some(&zero), 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn scale_validation_names_fields() {
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let field = |r: roughflow::Result<ScaleParams>| match r {
        Err(Error::Param { field, .. }) => field,
        other => panic!("{other:?}"),
    };
    assert_eq!(field(ScaleParams::new(0.1, 0.2, &grid, 0.35)), "delta");
    assert_eq!(field(ScaleParams::new(1.5, 0.01, &grid, 0.35)), "eps");
    assert_eq!(field(ScaleParams::new(0.1, 0.05, &grid, 0.35)), "delta");
    assert_eq!(field(ScaleParams::with(0.1, 0.01, Some(0.003), None, None, &grid, 0.35)), "block");
    assert_eq!(field(ScaleParams::with(0.1, 0.01, None, Some(0), None, &grid, 0.35)), "micro_steps");
    let ok = ScaleParams::new(0.1, 0.001, &grid, 0.35).unwrap();
    assert!(ok.block >= grid.h() && ok.block <= 1.0);
    let k = (ok.block / grid.h()).round();
    assert!((k * grid.h() - ok.block).abs() < 1e-12);
    assert!(ok.micro_steps >= 16 && grid.h() / ok.micro_steps as f64 <= 0.001 / 16.0 + 1e-15);
}

#[test]
fn auxiliary_process_at_finest_block_is_the_fast_path() {
    let model = LinearOu::default();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let driver = sample_mixed(&grid, &hurst(), 1, 1, 21).unwrap();
    let scales = ScaleParams::with(0.1, 0.001, Some(grid.h()), None, None, &grid, hurst().beta).unwrap();
    let run = integrate_slowfast(&model, &scales, &[1.0], &[0.3], &driver, None, 21).unwrap();
    let aux = auxiliary_fast(&model, &scales, &run.slow.path(), &driver.w, &[0.3], 21).unwrap();
    assert_eq!(aux, run.fast);
    // the shared micro noise sums to the macro increments
    let noise = micro_noise(&driver.w, scales.micro_steps, 21);
    assert_eq!(noise, micro_noise(&driver.w, scales.micro_steps, 21));
    let inc = driver.w.increments();
    for k in 0..64 {
        let s: f64 = noise[k * scales.micro_steps..(k + 1) * scales.micro_steps].iter().sum();
        assert!((s - inc[k]).abs() < 1e-12);
    }
}

#[test]
fn auxiliary_with_constant_slow_path_has_frozen_law() {
    let model = LinearOu::default();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let delta = 0.05;
    let scales = ScaleParams::with(0.9, delta, Some(4.0 * grid.h()), Some(8), None, &grid, hurst().beta).unwrap();
    let slow = Path::from_fn(grid, 1, |_| vec![1.5]);
    let micro_h = grid.h() / 8.0 / delta;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for seed in 0..3000u64 {
        let w = roughflow::drivers::sample_bm(&grid, 1, seed).unwrap();
        a.push(auxiliary_fast(&model, &scales, &slow, &w, &[0.0], seed).unwrap().terminal()[0]);
        let fr = frozen_fast(&model, &[1.5], &[0.0], 1.0 / delta, micro_h, 100_000 + seed).unwrap();
        b.push(fr.at(fr.len() - 1)[0]);
    }
    let (_, p) = ks_two_sample(&a, &b);
    assert!(p > 0.01, "KS p = {p}");
}

#[test]
fn fast_law_is_invariant_under_time_rescaling() {
    let c = 4.0;
    let base = LinearOu::default();
    let slowed = LinearOu { gamma: base.gamma / c, s2: base.s2 / c.sqrt(), ..base };
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let s1 = ScaleParams::with(0.5, 0.02, None, Some(16), None, &grid, hurst().beta).unwrap();
    let s2 = ScaleParams::with(0.5, 0.02 / c, None, Some(16), None, &grid, hurst().beta).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for seed in 0..3000u64 {
        let da = sample_mixed(&grid, &hurst(), 1, 1, seed).unwrap();
        let db = sample_mixed(&grid, &hurst(), 1, 1, 50_000 + seed).unwrap();
        a.push(integrate_slowfast(&base, &s1, &[1.0], &[0.0], &da, None, seed).unwrap().fast.at(16)[0]);
        b.push(integrate_slowfast(&slowed, &s2, &[1.0], &[0.0], &db, None, 50_000 + seed).unwrap().fast.at(16)[0]);
    }
    let (_, p) = ks_two_sample(&a, &b);
    assert!(p > 0.01, "KS p = {p}");
}

#[test]
fn frozen_ou_stationary_moments() {
    let model = LinearOu { gamma: 1.0, kappa: 0.5, s2: 1.0, ..LinearOu::default() };
    let x = [2.0];
    let ends: Vec<f64> = (0..1000)
        .map(|s| {
            let tr = frozen_fast(&model, &x, &[0.0], 10.0, 0.01, s).unwrap();
            tr.at(tr.len() - 1)[0]
        })
        .collect();
    let (m, se) = mean_se(&ends);
    assert!((m - 1.0).abs() < 3.0 * se, "{m} ± {se}");
    let v = variance(&ends);
    assert!((v / 0.5 - 1.0).abs() < 0.05 * 2.0, "variance {v}");

    // without noise the flow settles at the root κx
    let quiet = LinearOu { s2: 0.0, ..model };
    let tr = frozen_fast(&quiet, &x, &[-3.0], 30.0, 0.01, 0).unwrap();
    assert!((tr.at(tr.len() - 1)[0] - 1.0).abs() < 1e-10);
}

#[test]
fn invariant_measure_estimate_oracles() {
    let model = LinearOu { gamma: 1.0, kappa: 1.0, s2: 2f64.sqrt(), ..LinearOu::default() };
    let est = estimate_invariant_measure(&model, &[2.0], &InvariantSettings::new(20_000), 4).unwrap();
    assert!((est.mean[0] / 2.0 - 1.0).abs() < 0.05);
    assert!((est.cov[0] - 1.0).abs() < 0.05);
    assert!(est.warning.is_none());
    assert_eq!(est.burn_in, 5.0);
    assert_eq!(est.thin, 2.0);

    // fast dynamics ignoring x
    let free = LinearOu { kappa: 0.0, ..model };
    let a = estimate_invariant_measure(&free, &[0.0], &InvariantSettings::new(5000), 1).unwrap();
    let b = estimate_invariant_measure(&free, &[5.0], &InvariantSettings::new(5000), 2).unwrap();
    assert!((a.mean[0] - b.mean[0]).abs() < 3.0 * combined_se(a.mean_se[0], b.mean_se[0]));

    // chains from far apart starts forget them
    let start = |y: f64, seed| {
        let s = InvariantSettings { y0: Some(vec![y]), ..InvariantSettings::new(5000) };
        estimate_invariant_measure(&model, &[2.0], &s, seed).unwrap()
    };
    let (lo, hi) = (start(-10.0, 7), start(10.0, 8));
    assert!((lo.mean[0] - hi.mean[0]).abs() < 3.0 * combined_se(lo.mean_se[0], hi.mean_se[0]));

    // an unmixed chain is flagged
    let raw = InvariantSettings { burn_in: Some(0.0), thin: Some(0.05), y0: Some(vec![500.0]), ..InvariantSettings::new(200) };
    assert!(estimate_invariant_measure(&model, &[2.0], &raw, 0).unwrap().warning.is_some());
}

#[test]
fn averaged_drift_oracles() {
    let model = LinearOu::default();
    let x = [1.5];
    let est = estimate_invariant_measure(&model, &x, &InvariantSettings::new(10_000), 12).unwrap();
    let mc = averaged_drift(&model, &x, DriftSource::Estimate(&est)).unwrap();
    let exact = model.a * x[0] + model.b * model.kappa * x[0];
    assert!((mc.value[0] - exact).abs() < 3.0 * mc.stderr[0], "{mc:?} vs {exact}");
    assert_eq!(averaged_drift(&model, &x, DriftSource::Analytic).unwrap().value, vec![exact]);

    let dec = Decoupled { s: 1.0 };
    let est = estimate_invariant_measure(&dec, &x, &InvariantSettings::new(500), 1).unwrap();
    let v = averaged_drift(&dec, &x, DriftSource::Estimate(&est)).unwrap().value[0];
    assert!((v + 1.5).abs() < 1e-12);

    let sq = estimate_invariant_measure(&SquareDrift, &[0.0], &InvariantSettings::new(20_000), 3).unwrap();
    let v = averaged_drift(&SquareDrift, &[0.0], DriftSource::Estimate(&sq)).unwrap().value[0];
    assert!((v - 1.0).abs() < 0.05, "{v}");

    match averaged_drift(&SquareDrift, &[1.0], DriftSource::Estimate(&sq)) {
        Err(Error::Param { field, .. }) => assert_eq!(field, "estimate"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(averaged_drift(&SquareDrift, &[1.0], DriftSource::Analytic), Err(Error::Param { .. })));
}

#[test]
fn autocovariance_decays_at_the_dissipation_rate() {
    let model = LinearOu::default();
    let rate = autocovariance_decay_rate(&model, &[1.0], 4000.0, 0.01, 6).unwrap();
    let target = model.constants().beta1 / 2.0;
    assert!(rate > target / 2.0 && rate < target * 2.0, "rate {rate}, target {target}");
}

#[test]
fn builtin_models_pass_assumption_checks() {
    check_assumptions(&LinearOu::default(), 4.0, 1000, 0).unwrap();
    check_assumptions(&roughflow::slowfast::BistableOu::default(), 4.0, 1000, 0).unwrap();
    let expanding = LinearOu { gamma: -1.0, ..LinearOu::default() };
    assert!(check_assumptions(&expanding, 4.0, 1000, 0).is_err());
}

#[test]
fn effective_dynamics_examples() {
    let model = LinearOu { a: -1.0, b: 0.0, ..LinearOu::default() };
    let grid = TimeGrid::new(1.0, 1 << 10).unwrap();
    let xbar = integrate_effective(&model, &EffectiveDrift::Analytic, &[1.0], &grid, None).unwrap();
    for k in (0..=1024).step_by(64) {
        assert!((xbar.at(k)[0] - (-grid.t(k)).exp()).abs() < 1e-4);
    }

    // σ₁ = 1, f̄₁ = 0, u = ct
    let flat = LinearOu { a: 0.0, b: 0.0, s1: 1.0, ..LinearOu::default() };
    let g = TimeGrid::new(2.0, 64).unwrap();
    let u = Path::from_fn(g, 1, |t| vec![0.7 * t]);
    let x = integrate_effective(&flat, &EffectiveDrift::Analytic, &[0.25], &g, Some(&u)).unwrap();
    for k in 0..=64 {
        assert!((x.at(k)[0] - 0.25 - 0.7 * g.t(k)).abs() < 1e-12);
    }

    // the skeleton ignores v
    let model = LinearOu::default();
    let kernel = VolterraKernel::new(&g, 0.4).unwrap();
    let udot: Vec<f64> = (0..64).map(|i| (i as f64 * 0.2).sin()).collect();
    let mk = |vdot: Vec<f64>| ControlPaths::new(CameronMartinControl::new(g, 0.4, 1, 1, udot.clone(), vdot).unwrap(), &kernel).unwrap();
    let a = skeleton(&model, &EffectiveDrift::Analytic, &[1.0], &mk(vec![0.0; 64])).unwrap();
    let b = skeleton(&model, &EffectiveDrift::Analytic, &[1.0], &mk((0..64).map(|i| i as f64 - 9.0).collect())).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tabulated_drift_interpolates_and_refuses_to_extrapolate() {
    let model = LinearOu::default();
    let table = DriftTable::build(&model, &[-1.0], &[3.0], &[9], &InvariantSettings::new(4000), 2).unwrap();
    let drift = EffectiveDrift::Table(table);
    let mut out = [0.0];
    for x in [-0.9, 0.3, 2.2] {
        drift.eval(&model, &[x], &mut out).unwrap();
        assert!((out[0] - (-0.5 * x)).abs() < 0.1, "{x}: {}", out[0]);
    }
    match drift.eval(&model, &[3.5], &mut out) {
        Err(Error::Param { field, .. }) => assert_eq!(field, "x"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn auxiliary_gap_shrinks_with_scale_ratio() {
    let model = LinearOu::default();
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let setup = ExperimentSetup { model: &model, hurst: hurst(), grid, x0: vec![1.0], y0: vec![0.0], drift: EffectiveDrift::Analytic };
    let eps = 0.1;
    let scales: Vec<ScaleParams> = [1e-1, 1e-2, 1e-3]
        .iter()
        .map(|r| ScaleParams::with(eps, r * eps, Some(grid.h()), None, None, &grid, hurst().beta).unwrap())
        .collect();
    let kernel = VolterraKernel::new(&grid, 0.4).unwrap();
    let ctrl = ControlPaths::new(CameronMartinControl::new(grid, 0.4, 1, 1, vec![0.0; 32], vec![1.0; 32]).unwrap(), &kernel).unwrap();
    let rows = auxiliary_gap_experiment(&setup, &scales, Some(&ctrl), 100, 4).unwrap();
    assert!(rows.iter().all(|r| r.metric == AUX_GAP));
    for w in rows.windows(2) {
        assert!(w[1].value < w[0].value, "{rows:?}");
    }
}

#[test]
fn averaging_trend_and_boundedness() {
    let model = LinearOu::default();
    let grid = TimeGrid::new(1.0, 64).unwrap();
    let setup = ExperimentSetup { model: &model, hurst: hurst(), grid, x0: vec![1.0], y0: vec![0.0], drift: EffectiveDrift::Analytic };
    let eps = 0.1;
    let scales: Vec<ScaleParams> = [1e-2, 1e-3, 1e-4].iter().map(|r| ScaleParams::new(eps, r * eps, &grid, hurst().beta).unwrap()).collect();
    let rows = averaging_experiment(&setup, &scales, 200, 5).unwrap();
    let series = |name: &str| rows.iter().filter(|r| r.metric == name).map(|r| r.value).collect::<Vec<_>>();
    let sup = series(SUP_ERROR);
    assert!(sup.windows(2).all(|w| w[1] < w[0]), "{sup:?}");
    for name in [HOLDER_SQ, FAST_ENERGY] {
        let v = series(name);
        let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(l, h), x| (l.min(*x), h.max(*x)));
        assert!(hi / lo <= 3.0, "{name}: {v:?}");
    }
}

#[test]
fn experiments_are_seed_reproducible() {
    let model = LinearOu::default();
    let grid = TimeGrid::new(1.0, 16).unwrap();
    let setup = ExperimentSetup { model: &model, hurst: hurst(), grid, x0: vec![1.0], y0: vec![0.0], drift: EffectiveDrift::Analytic };
    let scales = [ScaleParams::new(0.1, 0.005, &grid, hurst().beta).unwrap()];
    let a = averaging_experiment(&setup, &scales, 20, 77).unwrap();
    let b = roughflow::par::with_workers(Some(1), || averaging_experiment(&setup, &scales, 20, 77)).unwrap().unwrap();
    assert_eq!(a, b);
}
