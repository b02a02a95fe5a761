//! Small dense helpers and a restarted GMRES for matrix-free operators.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};
use crate::Result;

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

#[inline]
pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

#[inline]
pub fn mat2_trace(a: &Mat2) -> f64 {
    a[0][0] + a[1][1]
}

#[inline]
pub fn mat2_det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

#[inline]
pub fn mat2_scale(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

#[inline]
pub fn mat2_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

/// Identity restricted to the first `n` coordinates (`n ∈ {1, 2}`).
#[inline]
pub fn identity_n(n: usize) -> Mat2 {
    if n == 1 {
        [[1.0, 0.0], [0.0, 0.0]]
    } else {
        IDENTITY2
    }
}

/// Thomas algorithm for a diagonally dominant tridiagonal system.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(abs(*x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Final `‖b - A x‖ / ‖b‖` (estimated by the Arnoldi recurrence).
    pub relative_residual: f64,
    pub converged: bool,
}

/// Restarted GMRES(`restart`) for `A x = b`, starting from the given `x`.
pub fn gmres<A>(
    mut apply: A,
    b: &[f64],
    x: &mut [f64],
    restart: usize,
    max_iter: usize,
    rel_tol: f64,
) -> Result<GmresOutcome>
where
    A: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(GmresOutcome { iterations: 0, relative_residual: 0.0, converged: true });
    }
    let m = restart.max(1);
    let mut ax = vec![0.0; n];
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iter {
        apply(x, &mut ax)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        rel = beta / bnorm;
        if rel <= rel_tol {
            return Ok(GmresOutcome { iterations: total, relative_residual: rel, converged: true });
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if total >= max_iter {
                break;
            }
            let mut w = vec![0.0; n];
            apply(&basis[k], &mut w)?;
            total += 1;
            // Modified Gram-Schmidt, twice for stability.
            for _ in 0..2 {
                for (j, vj) in basis.iter().enumerate() {
                    let h = dot(&w, vj);
                    hess[j][k] += h;
                    w.iter_mut().zip(vj).for_each(|(wi, vi)| *wi -= h * vi);
                }
            }
            let wn = norm2(&w);
            hess[k + 1][k] = wn;
            for j in 0..k {
                let t = cs[j] * hess[j][k] + sn[j] * hess[j + 1][k];
                hess[j + 1][k] = -sn[j] * hess[j][k] + cs[j] * hess[j + 1][k];
                hess[j][k] = t;
            }
            let denom = sqrt(hess[k][k] * hess[k][k] + hess[k + 1][k] * hess[k + 1][k]);
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = abs(g[k + 1]) / bnorm;
            if rel <= rel_tol || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[j]).for_each(|(xi, vi)| *xi += yj * vi);
        }
        if rel <= rel_tol {
            return Ok(GmresOutcome { iterations: total, relative_residual: rel, converged: true });
        }
        if k_used == 0 {
            break;
        }
    }
    Ok(GmresOutcome { iterations: total, relative_residual: rel, converged: rel <= rel_tol })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_direct() {
        let sub = [0.0, 1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let sup = [1.0, 1.0, 1.0, 0.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x_true[i]
                    + if i > 0 { sub[i] * x_true[i - 1] } else { 0.0 }
                    + if i < 3 { sup[i] * x_true[i + 1] } else { 0.0 }
            })
            .collect();
        let x = solve_tridiagonal(&sub, &diag, &sup, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        let n = 40;
        // Convection-diffusion-like nonsymmetric operator.
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { v[i - 1] } else { 0.0 };
                let r = if i + 1 < n { v[i + 1] } else { 0.0 };
                out[i] = 3.0 * v[i] - 1.3 * l - 0.7 * r;
            }
            Ok(())
        };
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let mut x = vec![0.0; n];
        let out = gmres(apply, &b, &mut x, 10, 500, 1e-12).unwrap();
        assert!(out.converged);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax).unwrap();
        let res: f64 = ax.iter().zip(&b).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        assert!(res / norm2(&b) < 1e-10);
    }
}
