use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, Rng};
use rand::Rng as _;

/// Relative step of the central finite-difference fallback for `Dσ`.
pub const FD_STEP: f64 = 1e-6;

/// Declared regularity bounds of a vector field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldBounds {
    /// Lipschitz constant of the drift and of `σ`.
    pub lipschitz: f64,
    pub drift_sup: f64,
    pub sigma_sup: f64,
}

/// Coefficients of `dY = f(Y) dt + σ(Y) dΞ` with state dimension `m` and
/// driver dimension `d`.
pub trait VectorField: Sync {
    fn state_dim(&self) -> usize;
    fn noise_dim(&self) -> usize;
    fn drift(&self, y: &[f64], out: &mut [f64]);
    /// `m × d`, row-major.
    fn sigma(&self, y: &[f64], out: &mut [f64]);
    /// `Dσ` as `m × d × m`: entry `[a][j][b] = ∂_b σ_{aj}`.
    ///
    /// Defaults to central differences; override with the analytic form when
    /// available.
    fn dsigma(&self, y: &[f64], out: &mut [f64]) {
        fd_jacobian_sigma(self, y, out)
    }
    fn bounds(&self) -> Option<FieldBounds> {
        None
    }
}

/// Central-difference `Dσ` with step `FD_STEP · max(1, |y_b|)`.
pub fn fd_jacobian_sigma<V: VectorField + ?Sized>(vf: &V, y: &[f64], out: &mut [f64]) {
    let (m, d) = (vf.state_dim(), vf.noise_dim());
    let mut yp = y.to_vec();
    let mut sp = vec![0.0; m * d];
    let mut sm = vec![0.0; m * d];
    for b in 0..m {
        let step = FD_STEP * y[b].abs().max(1.0);
        yp[b] = y[b] + step;
        vf.sigma(&yp, &mut sp);
        yp[b] = y[b] - step;
        vf.sigma(&yp, &mut sm);
        yp[b] = y[b];
        for a in 0..m {
            for j in 0..d {
                out[(a * d + j) * m + b] = (sp[a * d + j] - sm[a * d + j]) / (2.0 * step);
            }
        }
    }
}

/// Vector field from closures; `dsigma` falls back to finite differences
/// unless supplied.
pub struct FnField<F, S> {
    pub m: usize,
    pub d: usize,
    pub f: F,
    pub s: S,
    pub ds: Option<Box<dyn Fn(&[f64], &mut [f64]) + Sync>>,
    pub bounds: Option<FieldBounds>,
}

impl<F, S> FnField<F, S>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
    S: Fn(&[f64], &mut [f64]) + Sync,
{
    pub fn new(m: usize, d: usize, f: F, s: S) -> Self {
        Self { m, d, f, s, ds: None, bounds: None }
    }

    pub fn with_dsigma(mut self, ds: impl Fn(&[f64], &mut [f64]) + Sync + 'static) -> Self {
        self.ds = Some(Box::new(ds));
        self
    }

    pub fn with_bounds(mut self, b: FieldBounds) -> Self {
        self.bounds = Some(b);
        self
    }
}

impl<F, S> VectorField for FnField<F, S>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
    S: Fn(&[f64], &mut [f64]) + Sync,
{
    fn state_dim(&self) -> usize {
        self.m
    }
    fn noise_dim(&self) -> usize {
        self.d
    }
    fn drift(&self, y: &[f64], out: &mut [f64]) {
        (self.f)(y, out)
    }
    fn sigma(&self, y: &[f64], out: &mut [f64]) {
        (self.s)(y, out)
    }
    fn dsigma(&self, y: &[f64], out: &mut [f64]) {
        match &self.ds {
            Some(ds) => ds(y, out),
            None => fd_jacobian_sigma(self, y, out),
        }
    }
    fn bounds(&self) -> Option<FieldBounds> {
        self.bounds
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub(crate) fn uniform_point(rng: &mut Rng, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-half_width..half_width)).collect()
}

/// Spot-checks the declared bounds on `samples` random states in the box
/// `[-half_width, half_width]^m`. A field without declared bounds passes.
pub fn check_bounds<V: VectorField + ?Sized>(vf: &V, half_width: f64, samples: usize, seed: u64) -> Result<()> {
    let Some(b) = vf.bounds() else { return Ok(()) };
    let (m, d) = (vf.state_dim(), vf.noise_dim());
    let mut rng = rng_from_seed(seed);
    let (mut f1, mut f2) = (vec![0.0; m], vec![0.0; m]);
    let (mut s1, mut s2) = (vec![0.0; m * d], vec![0.0; m * d]);
    let slack = 1.0 + 1e-9;
    for _ in 0..samples {
        let x = uniform_point(&mut rng, m, half_width);
        let y = uniform_point(&mut rng, m, half_width);
        vf.drift(&x, &mut f1);
        vf.drift(&y, &mut f2);
        vf.sigma(&x, &mut s1);
        vf.sigma(&y, &mut s2);
        let dxy = diff(&x, &y);
        if norm(&f1) > b.drift_sup * slack {
            return Err(Error::Config(format!("drift bound {} violated at {x:?}", b.drift_sup)));
        }
        if norm(&s1) > b.sigma_sup * slack {
            return Err(Error::Config(format!("sigma bound {} violated at {x:?}", b.sigma_sup)));
        }
        if diff(&f1, &f2) > b.lipschitz * dxy * slack || diff(&s1, &s2) > b.lipschitz * dxy * slack {
            return Err(Error::Config(format!("Lipschitz constant {} violated between {x:?} and {y:?}", b.lipschitz)));
        }
    }
    Ok(())
}
