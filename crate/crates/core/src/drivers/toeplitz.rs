//! Levinson recursion for symmetric positive-definite Toeplitz systems.

use crate::error::{Error, Result};

/// Solves `T x = b` where `T[i][j] = r[|i - j|]`.
pub fn solve_symmetric_toeplitz(r: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if r.len() < n {
        return Err(Error::Param {
            field: "toeplitz".into(),
            reason: "autocovariance shorter than right-hand side".into(),
        });
    }
    if n == 0 {
        return Ok(vec![]);
    }
    if r[0] <= 0.0 {
        return Err(Error::Resource("Toeplitz matrix is not positive definite".into()));
    }
    // forward vector f_k solves T_k f = e_1 style recursion (Durbin) combined
    // with the Levinson update for the general right-hand side.
    let mut x = vec![b[0] / r[0]];
    let mut a: Vec<f64> = vec![1.0];
    let mut err = r[0];
    for k in 1..n {
        // extend the prediction filter a (length k) to length k + 1
        let mut acc = 0.0;
        for j in 0..k {
            acc += a[j] * r[k - j];
        }
        let refl = -acc / err;
        let mut next = vec![0.0; k + 1];
        for j in 0..=k {
            let aj = if j < k { a[j] } else { 0.0 };
            let ar = if j > 0 { a[k - j] } else { 0.0 };
            next[j] = aj + refl * ar;
        }
        err *= 1.0 - refl * refl;
        if err <= 0.0 {
            return Err(Error::Resource("Toeplitz matrix is not positive definite".into()));
        }
        a = next;
        // update solution
        let mut s = 0.0;
        for j in 0..k {
            s += r[k - j] * x[j];
        }
        let mu = (b[k] - s) / err;
        x.push(0.0);
        for j in 0..=k {
            x[j] += mu * a[k - j];
        }
    }
    Ok(x)
}
