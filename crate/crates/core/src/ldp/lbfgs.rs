//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

use crate::error::Result;

pub(crate) struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// stopped on the gradient or stall test rather than the iteration cap
    pub converged: bool,
}

pub(crate) struct LbfgsSettings {
    pub max_iters: usize,
    pub history: usize,
    pub grad_tol: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimises `f`, which returns `(value, gradient)`. A non-finite value
/// (e.g. a diverging state) is treated as `+∞` by the line search.
pub(crate) fn minimize(mut f: impl FnMut(&[f64]) -> Result<(f64, Vec<f64>)>, x0: Vec<f64>, s: &LbfgsSettings) -> Result<LbfgsOutcome> {
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(s.history);
    let mut iterations = 0;
    let mut converged = false;
    let mut stall = 0;
    while iterations < s.max_iters {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= s.grad_tol * (1.0 + fx.abs()) {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (sv, yv, rho) in mem.iter().rev() {
            let a = rho * dot(sv, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = mem.back().map(|(sv, yv, _)| dot(sv, yv) / dot(yv, yv)).unwrap_or(1.0 / gnorm.max(1.0));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((sv, yv, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(sv) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            mem.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            let (fnew, gnew) = f(&xn)?;
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fnew, gnew));
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        let Some((xn, fnew, gnew)) = accepted else {
            // no descent possible at working precision
            converged = true;
            break;
        };
        let sv: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-12 * dot(&sv, &sv).sqrt() * dot(&yv, &yv).sqrt() {
            if mem.len() == s.history {
                mem.pop_front();
            }
            mem.push_back((sv, yv, 1.0 / sy));
        }
        let decrease = fx - fnew;
        x = xn;
        fx = fnew;
        g = gnew;
        if decrease <= 1e-15 * (1.0 + fx.abs()) {
            stall += 1;
            if stall >= 3 {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }
    Ok(LbfgsOutcome { x, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
            Ok((v, g))
        };
        let out = minimize(f, vec![-1.2, 1.0], &LbfgsSettings { max_iters: 500, history: 10, grad_tol: 1e-10 }).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{:?}", out.x);
    }
}
