use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rde::{uniform_point, FD_STEP};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// slow state
    pub m: usize,
    /// fast state
    pub n: usize,
    /// fBm driver
    pub d: usize,
    /// Brownian driver
    pub e: usize,
}

/// Constants of the standing assumptions: Lipschitz/growth `L`, the two
/// dissipativity rates `β₁`, `β₂` and the growth constant `C` of the second
/// dissipativity inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub lipschitz: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub growth: f64,
}

/// Gaussian measure `N(mean, cov)` registered as an exact invariant law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasure {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

/// Coefficients `(f₁, f₂, σ₁, σ₂)` of the slow-fast system.
///
/// Implementations must be pure: the Monte Carlo drivers call them from many
/// threads at once.
pub trait SlowFastModel: Send + Sync {
    fn name(&self) -> &str;
    fn dims(&self) -> ModelDims;
    fn constants(&self) -> ModelConstants;
    fn f1(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    fn f2(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    /// `m × d`
    fn sigma1(&self, x: &[f64], out: &mut [f64]);
    /// `m × d × m`, entry `[a][j][b] = ∂_b σ₁_{aj}`; central differences by default.
    fn dsigma1(&self, x: &[f64], out: &mut [f64]) {
        let ModelDims { m, d, .. } = self.dims();
        let mut xp = x.to_vec();
        let (mut sp, mut sm) = (vec![0.0; m * d], vec![0.0; m * d]);
        for b in 0..m {
            let step = FD_STEP * x[b].abs().max(1.0);
            xp[b] = x[b] + step;
            self.sigma1(&xp, &mut sp);
            xp[b] = x[b] - step;
            self.sigma1(&xp, &mut sm);
            xp[b] = x[b];
            for a in 0..m {
                for j in 0..d {
                    out[(a * d + j) * m + b] = (sp[a * d + j] - sm[a * d + j]) / (2.0 * step);
                }
            }
        }
    }
    /// `n × e`
    fn sigma2(&self, x: &[f64], y: &[f64], out: &mut [f64]);
    /// Exact invariant law of the frozen fast process, if known.
    fn analytic_invariant(&self, _x: &[f64]) -> Option<GaussianMeasure> {
        None
    }
    /// Exact averaged drift, if known. Returns `false` when unavailable.
    fn analytic_averaged_drift(&self, _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }
}

/// Slow `f₁ = a x + b y`, `σ₁ = s1`; fast Ornstein–Uhlenbeck
/// `f₂ = −γ(y − κ x)`, `σ₂ = s2` (all scalar).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearOu {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub s1: f64,
    pub s2: f64,
}

impl Default for LinearOu {
    fn default() -> Self {
        Self { a: -1.0, b: 1.0, gamma: 1.0, kappa: 0.5, s1: 0.2, s2: 1.0 }
    }
}

/// Slow `f₁ = x − x³ + c sin y`, `σ₁ = s1 (1 + 0.3 sin x)`; fast OU as in
/// [`LinearOu`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BistableOu {
    pub c: f64,
    pub s1: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub s2: f64,
}

impl Default for BistableOu {
    fn default() -> Self {
        Self { c: 0.5, s1: 0.3, gamma: 1.0, kappa: 1.0, s2: 1.0 }
    }
}

/// Half-width of the box on which builtin constants are declared valid.
pub const DEFAULT_CHECK_BOX: f64 = 4.0;

fn ou_constants(gamma: f64, kappa: f64, s2: f64) -> (f64, f64, f64) {
    // 2<y1-y2, f2(x,y1)-f2(x,y2)> = -2γ|y1-y2|²; 2<y,f2> + s² <= -γ y² + γκ²x² + s²
    let growth = (gamma * kappa * kappa).max(s2 * s2);
    (2.0 * gamma, gamma, growth)
}

impl SlowFastModel for LinearOu {
    fn name(&self) -> &str {
        "linear-ou"
    }
    fn dims(&self) -> ModelDims {
        ModelDims { m: 1, n: 1, d: 1, e: 1 }
    }
    fn constants(&self) -> ModelConstants {
        let (beta1, beta2, growth) = ou_constants(self.gamma, self.kappa, self.s2);
        let r = DEFAULT_CHECK_BOX;
        let lip = (self.a.abs() + self.b.abs() + self.gamma * (1.0 + self.kappa.abs()))
            .max((self.a.abs() + self.b.abs()) * r)
            .max(self.s2.abs());
        ModelConstants { lipschitz: lip, beta1, beta2, growth }
    }
    fn f1(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = self.a * x[0] + self.b * y[0];
    }
    fn f2(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = -self.gamma * (y[0] - self.kappa * x[0]);
    }
    fn sigma1(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = self.s1;
    }
    fn dsigma1(&self, _x: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn sigma2(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out[0] = self.s2;
    }
    fn analytic_invariant(&self, x: &[f64]) -> Option<GaussianMeasure> {
        Some(GaussianMeasure {
            mean: vec![self.kappa * x[0]],
            cov: vec![self.s2 * self.s2 / (2.0 * self.gamma)],
        })
    }
    fn analytic_averaged_drift(&self, x: &[f64], out: &mut [f64]) -> bool {
        out[0] = self.a * x[0] + self.b * self.kappa * x[0];
        true
    }
}

impl SlowFastModel for BistableOu {
    fn name(&self) -> &str {
        "bistable-ou"
    }
    fn dims(&self) -> ModelDims {
        ModelDims { m: 1, n: 1, d: 1, e: 1 }
    }
    fn constants(&self) -> ModelConstants {
        let (beta1, beta2, growth) = ou_constants(self.gamma, self.kappa, self.s2);
        let r = DEFAULT_CHECK_BOX;
        let lip = (1.0 + 3.0 * r * r + self.c.abs() + self.gamma * (1.0 + self.kappa.abs()))
            .max(r + r * r * r + self.c.abs())
            .max(self.s2.abs());
        ModelConstants { lipschitz: lip, beta1, beta2, growth }
    }
    fn f1(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = x[0] - x[0].powi(3) + self.c * y[0].sin();
    }
    fn f2(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out[0] = -self.gamma * (y[0] - self.kappa * x[0]);
    }
    fn sigma1(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.s1 * (1.0 + 0.3 * x[0].sin());
    }
    fn dsigma1(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.s1 * 0.3 * x[0].cos();
    }
    fn sigma2(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out[0] = self.s2;
    }
    fn analytic_invariant(&self, x: &[f64]) -> Option<GaussianMeasure> {
        Some(GaussianMeasure {
            mean: vec![self.kappa * x[0]],
            cov: vec![self.s2 * self.s2 / (2.0 * self.gamma)],
        })
    }
    fn analytic_averaged_drift(&self, x: &[f64], out: &mut [f64]) -> bool {
        // E sin(Y) = sin(μ) exp(−var/2) for Y ~ N(μ, var)
        let var = self.s2 * self.s2 / (2.0 * self.gamma);
        out[0] = x[0] - x[0].powi(3) + self.c * (self.kappa * x[0]).sin() * (-0.5 * var).exp();
        true
    }
}

/// Builtin models selectable by name from configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BuiltinModel {
    LinearOu(LinearOu),
    BistableOu(BistableOu),
}

impl BuiltinModel {
    pub fn as_model(&self) -> &dyn SlowFastModel {
        match self {
            BuiltinModel::LinearOu(m) => m,
            BuiltinModel::BistableOu(m) => m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub samples: usize,
    pub half_width: f64,
    pub constants: ModelConstants,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Spot-checks the Lipschitz, growth and dissipativity assumptions on random
/// points of the box `[-half_width, half_width]`. This is a sampled heuristic,
/// not a proof; any violation is a configuration error naming the condition.
pub fn check_assumptions(model: &dyn SlowFastModel, half_width: f64, samples: usize, seed: u64) -> Result<AssumptionReport> {
    let ModelDims { m, n, d, e } = model.dims();
    let c = model.constants();
    let mut rng = rng_from_seed(seed);
    let slack = 1.0 + 1e-9;
    let (mut a1, mut a2) = (vec![0.0; m], vec![0.0; m]);
    let (mut b1, mut b2) = (vec![0.0; n], vec![0.0; n]);
    let (mut s1, mut s2) = (vec![0.0; n * e], vec![0.0; n * e]);
    let (mut q1, mut q2) = (vec![0.0; m * d], vec![0.0; m * d]);
    let fail = |cond: &str, detail: String| Err(Error::Config(format!("assumption {cond} violated: {detail}")));
    for _ in 0..samples {
        let x1 = uniform_point(&mut rng, m, half_width);
        let x2 = uniform_point(&mut rng, m, half_width);
        let y1 = uniform_point(&mut rng, n, half_width);
        let y2 = uniform_point(&mut rng, n, half_width);
        let dxy = dist(&x1, &x2) + dist(&y1, &y2);
        model.f1(&x1, &y1, &mut a1);
        model.f1(&x2, &y2, &mut a2);
        model.f2(&x1, &y1, &mut b1);
        model.f2(&x2, &y2, &mut b2);
        if dist(&a1, &a2) + dist(&b1, &b2) > c.lipschitz * dxy * slack {
            return fail("A2", format!("drift Lipschitz constant {} exceeded at x={x1:?}, y={y1:?}", c.lipschitz));
        }
        if norm(&a1) > c.lipschitz * slack {
            return fail("A2", format!("|f1| exceeds {} at x={x1:?}, y={y1:?}", c.lipschitz));
        }
        model.sigma2(&x1, &y1, &mut s1);
        model.sigma2(&x2, &y2, &mut s2);
        if dist(&s1, &s2) > c.lipschitz * dxy * slack {
            return fail("A3", format!("sigma2 Lipschitz constant {} exceeded", c.lipschitz));
        }
        if norm(&s1) > c.lipschitz * (1.0 + norm(&x1)) * slack {
            return fail("A3", format!("sigma2 growth bound exceeded at x={x1:?}"));
        }
        model.sigma1(&x1, &mut q1);
        model.sigma1(&x2, &mut q2);
        if !q1.iter().all(|v| v.is_finite()) {
            return fail("A1", "sigma1 not finite".into());
        }
        // dissipativity at common x
        model.f2(&x1, &y1, &mut b1);
        model.f2(&x1, &y2, &mut b2);
        model.sigma2(&x1, &y1, &mut s1);
        model.sigma2(&x1, &y2, &mut s2);
        let dy: Vec<f64> = y1.iter().zip(&y2).map(|(p, q)| p - q).collect();
        let inner: f64 = dy.iter().zip(b1.iter().zip(&b2)).map(|(u, (p, q))| u * (p - q)).sum();
        let dsig = dist(&s1, &s2);
        let dy2: f64 = dy.iter().map(|v| v * v).sum();
        if 2.0 * inner + dsig * dsig > -c.beta1 * dy2 + 1e-9 * (1.0 + dy2) {
            return fail("A4", format!("contraction rate beta1={} not met at x={x1:?}", c.beta1));
        }
        let inner1: f64 = y1.iter().zip(&b1).map(|(p, q)| p * q).sum();
        let y12: f64 = y1.iter().map(|v| v * v).sum();
        let x12: f64 = x1.iter().map(|v| v * v).sum();
        let s12: f64 = s1.iter().map(|v| v * v).sum();
        if 2.0 * inner1 + s12 > -c.beta2 * y12 + c.growth * x12 + c.growth + 1e-9 {
            return fail("A4", format!("dissipativity beta2={} with C={} not met at x={x1:?}, y={y1:?}", c.beta2, c.growth));
        }
    }
    Ok(AssumptionReport { samples, half_width, constants: c })
}
