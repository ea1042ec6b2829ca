use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsSettings};
use crate::drivers::{CameronMartinControl, ControlPaths, VolterraKernel};
use crate::error::{param, Error, Result};
use crate::grid::{Path, TimeGrid};
use crate::rng::{fill_normal, rng_from_seed, stream_seed};
use crate::slowfast::{integrate_effective, rk4_jacobian, EffectiveDrift, ModelDims, SlowFastModel};

/// Inner radius factor of the tube penalty: the penalty pushes the skeleton
/// slightly inside the tube so that the feasibility test is not decided by
/// rounding.
const TUBE_SHRINK: f64 = 1e-3;

/// Constraint on the skeleton.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// `X_T = ξ`
    Terminal(Vec<f64>),
    /// `sup_t |X_t − path_t| ≤ radius`
    Tube { path: Path, radius: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    /// iteration cap per penalty stage
    pub max_iters: usize,
    /// terminal residual accepted as feasible
    pub tolerance: f64,
    /// number of starting points (the first is the zero control)
    pub restarts: usize,
    pub penalty_start: f64,
    pub penalty_factor: f64,
    pub penalty_stages: usize,
    pub history: usize,
    pub grad_tol: f64,
    /// standard deviation of random starts in scaled coordinates
    pub restart_scale: f64,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            max_iters: 400,
            tolerance: 1e-4,
            restarts: 4,
            penalty_start: 100.0,
            penalty_factor: 10.0,
            penalty_stages: 6,
            history: 10,
            grad_tol: 1e-10,
            restart_scale: 0.5,
            seed: 0,
        }
    }
}

/// Minimise `½‖u‖²_ℋ` subject to the skeleton started at `x0` meeting
/// `target`. The Brownian block of the control is fixed to zero.
pub struct RateProblem<'a> {
    pub model: &'a dyn SlowFastModel,
    pub drift: EffectiveDrift,
    pub hurst: f64,
    pub grid: TimeGrid,
    pub x0: Vec<f64>,
    pub target: Target,
    pub settings: OptimizerSettings,
    /// extra starting points; any that is already feasible also competes as is
    pub candidates: Vec<CameronMartinControl>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub u_star: CameronMartinControl,
    /// `½‖u*‖²_ℋ`
    pub value: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// penalty weight of the stage that produced `u_star` (0 for a raw candidate)
    pub penalty: f64,
    pub skeleton: Path,
}

/// Skeleton `G⁰(u, v)`. Only `u` enters, so the output is independent of `v`.
pub fn skeleton(model: &dyn SlowFastModel, drift: &EffectiveDrift, x0: &[f64], ctrl: &ControlPaths) -> Result<Path> {
    integrate_effective(model, drift, x0, &ctrl.u.grid, Some(&ctrl.u))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Prepared problem: kernel built once.
struct Prepared<'p, 'a> {
    p: &'p RateProblem<'a>,
    kernel: VolterraKernel,
    m: usize,
    d: usize,
}

impl<'p, 'a> Prepared<'p, 'a> {
    fn new(p: &'p RateProblem<'a>) -> Result<Self> {
        let ModelDims { m, d, .. } = p.model.dims();
        if p.x0.len() != m {
            return Err(param("x0", format!("expected {m} components")));
        }
        match &p.target {
            Target::Terminal(xi) => {
                if xi.len() != m {
                    return Err(param("target", format!("terminal point needs {m} components")));
                }
            }
            Target::Tube { path, radius } => {
                if !(*radius > 0.0) {
                    return Err(param("radius", "tube radius must be positive"));
                }
                if path.grid != p.grid || path.dim != m {
                    return Err(param("target", "reference path does not match grid and state dimension"));
                }
            }
        }
        let s = &p.settings;
        if !(s.penalty_start > 0.0 && s.penalty_factor > 1.0) || s.penalty_stages == 0 {
            return Err(param("penalty", "schedule must start positive and increase"));
        }
        if s.restarts == 0 || s.history == 0 {
            return Err(param("restarts", "need at least one start and a positive history"));
        }
        Ok(Self { p, kernel: VolterraKernel::new(&p.grid, p.hurst)?, m, d })
    }

    fn control(&self, udot: Vec<f64>) -> Result<CameronMartinControl> {
        CameronMartinControl::new(self.p.grid, self.p.hurst, self.d, 0, udot, vec![])
    }

    fn forward(&self, udot: &[f64]) -> Result<(Path, Path)> {
        let u = self.kernel.apply(udot, self.d);
        let x = integrate_effective(self.p.model, &self.p.drift, &self.p.x0, &self.p.grid, Some(&u))?;
        Ok((u, x))
    }

    /// Penalty value and its gradient with respect to each state.
    fn penalty(&self, x: &Path, want_grad: bool) -> (f64, Vec<f64>) {
        let m = self.m;
        let mut grad = if want_grad { vec![0.0; x.values.len()] } else { vec![] };
        match &self.p.target {
            Target::Terminal(xi) => {
                let n = x.grid.n_steps;
                let mut v = 0.0;
                for a in 0..m {
                    let r = x.at(n)[a] - xi[a];
                    v += r * r;
                    if want_grad {
                        grad[n * m + a] = 2.0 * r;
                    }
                }
                (v, grad)
            }
            Target::Tube { path, radius } => {
                let inner = radius * (1.0 - TUBE_SHRINK);
                let mut v = 0.0;
                for k in 1..=x.grid.n_steps {
                    let diff: Vec<f64> = x.at(k).iter().zip(path.at(k)).map(|(a, b)| a - b).collect();
                    let dist = norm(&diff);
                    if dist > inner {
                        v += (dist - inner).powi(2);
                        if want_grad {
                            for a in 0..m {
                                grad[k * m + a] = 2.0 * (dist - inner) * diff[a] / dist;
                            }
                        }
                    }
                }
                (v, grad)
            }
        }
    }

    fn residual(&self, x: &Path) -> f64 {
        match &self.p.target {
            Target::Terminal(xi) => x.terminal().iter().zip(xi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Target::Tube { path, radius } => {
                let mut worst = 0.0f64;
                for k in 0..=x.grid.n_steps {
                    let dist = x.at(k).iter().zip(path.at(k)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    worst = worst.max(dist - radius);
                }
                worst
            }
        }
    }

    fn feasible(&self, residual: f64) -> bool {
        match self.p.target {
            Target::Terminal(_) => residual <= self.p.settings.tolerance,
            Target::Tube { .. } => residual <= 0.0,
        }
    }

    /// `½ Σ|udot_k|² h + λ P(X)` and its gradient in `udot`.
    fn objective(&self, lambda: f64, udot: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (m, d) = (self.m, self.d);
        let grid = self.p.grid;
        let (n, h) = (grid.n_steps, grid.h());
        let (u, x) = self.forward(udot)?;
        let (pen, pgrad) = self.penalty(&x, true);
        let value = 0.5 * udot.iter().map(|v| v * v).sum::<f64>() * h + lambda * pen;
        let model = self.p.model;
        let mut p: Vec<f64> = pgrad[n * m..].iter().map(|v| lambda * v).collect();
        let mut g_du = vec![0.0; n * d];
        let mut s = vec![0.0; m * d];
        let mut ds = vec![0.0; m * d * m];
        let mut jac = vec![0.0; m * m];
        let mut pn = vec![0.0; m];
        for k in (0..n).rev() {
            let xk = x.at(k);
            model.sigma1(xk, &mut s);
            for j in 0..d {
                g_du[k * d + j] = (0..m).map(|a| s[a * d + j] * p[a]).sum();
            }
            if k == 0 {
                break;
            }
            rk4_jacobian(model, &self.p.drift, xk, h, &mut jac)?;
            model.dsigma1(xk, &mut ds);
            let du: Vec<f64> = (0..d).map(|j| u.at(k + 1)[j] - u.at(k)[j]).collect();
            for b in 0..m {
                let mut acc = lambda * pgrad[k * m + b];
                for a in 0..m {
                    let mut ab = jac[a * m + b];
                    for j in 0..d {
                        ab += ds[(a * d + j) * m + b] * du[j];
                    }
                    acc += ab * p[a];
                }
                pn[b] = acc;
            }
            p.copy_from_slice(&pn);
        }
        let mut g_u = vec![0.0; (n + 1) * d];
        for jj in 1..=n {
            for c in 0..d {
                let next = if jj < n { g_du[jj * d + c] } else { 0.0 };
                g_u[jj * d + c] = g_du[(jj - 1) * d + c] - next;
            }
        }
        let mut grad = self.kernel.apply_transpose(&g_u, d);
        for (gk, uk) in grad.iter_mut().zip(udot) {
            *gk += uk * h;
        }
        Ok((value, grad))
    }
}

/// Objective `½‖u‖²_ℋ + λ·penalty(skeleton(u), target)` and its adjoint
/// gradient with respect to the coefficients `udot` (`n × d`).
pub fn objective_and_gradient(problem: &RateProblem<'_>, lambda: f64, udot: &[f64]) -> Result<(f64, Vec<f64>)> {
    let prep = Prepared::new(problem)?;
    if udot.len() != problem.grid.n_steps * prep.d {
        return Err(param("udot", "length must be n_steps × d"));
    }
    prep.objective(lambda, udot)
}

/// `½‖u‖²_ℋ` if the skeleton of `ctrl` meets the target, `+∞` otherwise.
pub fn rate_along_path(problem: &RateProblem<'_>, ctrl: &CameronMartinControl) -> Result<f64> {
    let prep = Prepared::new(problem)?;
    if ctrl.grid != problem.grid || ctrl.d != prep.d || ctrl.hurst != problem.hurst {
        return Err(param("control", "control shape does not match the problem"));
    }
    let x = match prep.forward(&ctrl.udot) {
        Ok((_, x)) => x,
        Err(Error::Divergence { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    if prep.feasible(prep.residual(&x)) {
        Ok(0.5 * ctrl.sq_norm)
    } else {
        Ok(f64::INFINITY)
    }
}

struct Candidate {
    udot: Vec<f64>,
    value: f64,
    residual: f64,
    penalty: f64,
    converged: bool,
}

fn run_start(prep: &Prepared<'_, '_>, z0: Vec<f64>) -> Result<(Vec<Candidate>, usize)> {
    let s = &prep.p.settings;
    let sq = prep.p.grid.h().sqrt();
    let lb = LbfgsSettings { max_iters: s.max_iters, history: s.history, grad_tol: s.grad_tol };
    let mut z = z0;
    let mut lambda = s.penalty_start;
    let mut out = Vec::new();
    let mut iterations = 0;
    for _ in 0..s.penalty_stages {
        let f = |zz: &[f64]| {
            let udot: Vec<f64> = zz.iter().map(|v| v / sq).collect();
            match prep.objective(lambda, &udot) {
                Ok((v, g)) => Ok((v, g.into_iter().map(|x| x / sq).collect())),
                // diverging skeleton or one leaving a tabulated drift box
                Err(Error::Divergence { .. } | Error::Param { .. }) => Ok((f64::INFINITY, vec![0.0; zz.len()])),
                Err(e) => Err(e),
            }
        };
        let res = minimize(f, z, &lb)?;
        iterations += res.iterations;
        z = res.x;
        let udot: Vec<f64> = z.iter().map(|v| v / sq).collect();
        if let Ok((_, x)) = prep.forward(&udot) {
            let residual = prep.residual(&x);
            let value = 0.5 * udot.iter().map(|v| v * v).sum::<f64>() * prep.p.grid.h();
            out.push(Candidate { udot, value, residual, penalty: lambda, converged: res.converged });
        }
        lambda *= s.penalty_factor;
    }
    Ok((out, iterations))
}

/// Rate function value by penalised minimisation over `udot` with adjoint
/// gradients and L-BFGS, warm-started through an increasing penalty
/// schedule. Starting points (zero control, random draws, user candidates)
/// run in parallel; the smallest feasible value wins, ties going to the
/// earliest start.
pub fn solve_rate(problem: &RateProblem<'_>) -> Result<RateResult> {
    let prep = Prepared::new(problem)?;
    let s = &problem.settings;
    let (n, d) = (problem.grid.n_steps, prep.d);
    let sq = problem.grid.h().sqrt();
    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; n * d]];
    for i in 1..s.restarts {
        let mut rng = rng_from_seed(stream_seed(s.seed, i as u64));
        let mut z = vec![0.0; n * d];
        fill_normal(&mut rng, &mut z, s.restart_scale);
        starts.push(z);
    }
    let mut raw = Vec::new();
    for c in &problem.candidates {
        if c.grid != problem.grid || c.d != d || c.hurst != problem.hurst {
            return Err(param("candidates", "candidate control shape does not match the problem"));
        }
        starts.push(c.udot.iter().map(|v| v * sq).collect());
        if let Ok((_, x)) = prep.forward(&c.udot) {
            let residual = prep.residual(&x);
            raw.push(Candidate { udot: c.udot.clone(), value: 0.5 * cm_sq(&c.udot, problem.grid.h()), residual, penalty: 0.0, converged: true });
        }
    }
    let runs: Vec<Result<(Vec<Candidate>, usize)>> = starts.into_par_iter().map(|z0| run_start(&prep, z0)).collect();
    let mut pool = Vec::new();
    let mut iterations = 0;
    for r in runs {
        let (c, it) = r?;
        iterations += it;
        pool.extend(c);
    }
    pool.extend(raw);
    let best = pool
        .iter()
        .filter(|c| prep.feasible(c.residual))
        .fold(None::<&Candidate>, |acc, c| match acc {
            Some(b) if b.value <= c.value => Some(b),
            _ => Some(c),
        });
    match best {
        Some(b) => {
            let u_star = prep.control(b.udot.clone())?;
            let (_, x) = prep.forward(&b.udot)?;
            Ok(RateResult {
                value: 0.5 * u_star.sq_norm,
                u_star,
                constraint_residual: b.residual,
                iterations,
                converged: b.converged,
                penalty: b.penalty,
                skeleton: x,
            })
        }
        None => {
            let closest = pool.iter().min_by(|a, b| a.residual.total_cmp(&b.residual));
            Err(Error::Infeasible {
                residual: closest.map_or(f64::INFINITY, |c| c.residual),
                value: closest.map_or(f64::INFINITY, |c| c.value),
            })
        }
    }
}

fn cm_sq(udot: &[f64], h: f64) -> f64 {
    udot.iter().map(|x| x * x).sum::<f64>() * h
}
