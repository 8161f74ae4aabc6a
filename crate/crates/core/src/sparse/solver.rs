use serde::{Deserialize, Serialize};

use super::precond::{Built, Preconditioner};
use super::{CsrMatrix, LinalgError};

/// Krylov method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cg,
    BiCgStab,
    Gmres { restart: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Relative residual target `||b - A x|| <= tolerance * ||b||`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
}

impl SolverConfig {
    /// Conjugate gradients with Jacobi scaling, for SPD systems.
    pub fn symmetric() -> Self {
        SolverConfig {
            method: Method::Cg,
            tolerance: 1e-10,
            max_iterations: 10_000,
            preconditioner: Preconditioner::Jacobi,
        }
    }

    /// BiCGSTAB with ILU(0), for the convection-diffusion systems.
    pub fn nonsymmetric() -> Self {
        SolverConfig {
            method: Method::BiCgStab,
            tolerance: 1e-10,
            max_iterations: 10_000,
            preconditioner: Preconditioner::Ilu0,
        }
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(LinalgError::InvalidConfig(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(LinalgError::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if let Method::Gmres { restart: 0 } = self.method {
            return Err(LinalgError::InvalidConfig(
                "gmres restart must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Achieved relative residual `||b - A x|| / ||b||`.
    pub residual: f64,
}

pub fn solve(a: &CsrMatrix, b: &[f64], cfg: &SolverConfig) -> Result<Solution, LinalgError> {
    solve_with_guess(a, b, &vec![0.0; b.len()], cfg)
}

/// Solve `A x = b` starting from `x0`.
pub fn solve_with_guess(
    a: &CsrMatrix,
    b: &[f64],
    x0: &[f64],
    cfg: &SolverConfig,
) -> Result<Solution, LinalgError> {
    cfg.validate()?;
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            nrows: a.nrows(),
            ncols: a.ncols(),
        });
    }
    for v in [b.len(), x0.len()] {
        if v != a.nrows() {
            return Err(LinalgError::DimensionMismatch {
                expected: a.nrows(),
                found: v,
            });
        }
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(Solution {
            x: vec![0.0; b.len()],
            iterations: 0,
            residual: 0.0,
        });
    }
    let pre = Built::new(cfg.preconditioner, a)?;
    let target = cfg.tolerance * bnorm;
    let mut x = x0.to_vec();
    let iterations = match cfg.method {
        Method::Cg => cg(a, b, &mut x, &pre, target, cfg.max_iterations),
        Method::BiCgStab => bicgstab(a, b, &mut x, &pre, target, cfg.max_iterations),
        Method::Gmres { restart } => gmres(a, b, &mut x, &pre, target, cfg.max_iterations, restart),
    };
    let residual = norm(&residual_vec(a, b, &x)) / bnorm;
    if residual <= cfg.tolerance && residual.is_finite() {
        Ok(Solution {
            x,
            iterations,
            residual,
        })
    } else {
        Err(LinalgError::NotConverged {
            iterations,
            residual,
            solution: x,
        })
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual_vec(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; b.len()];
    a.spmv_into(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

fn cg(a: &CsrMatrix, b: &[f64], x: &mut [f64], pre: &Built, target: f64, maxit: usize) -> usize {
    let n = b.len();
    let mut r = residual_vec(a, b, x);
    if norm(&r) <= target {
        return 0;
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=maxit {
        a.spmv_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !pap.is_finite() {
            return it;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= target {
            // guard against drift of the recursive residual
            r = residual_vec(a, b, x);
            if norm(&r) <= target {
                return it;
            }
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    maxit
}

fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pre: &Built,
    target: f64,
    maxit: usize,
) -> usize {
    let n = b.len();
    let mut r = residual_vec(a, b, x);
    if norm(&r) <= target {
        return 0;
    }
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=maxit {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            // shadow residual orthogonal to r: restart the recurrence
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            if dot(&r, &r) == 0.0 {
                return it;
            }
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut p_hat);
        a.spmv_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            return it;
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            let rr = residual_vec(a, b, x);
            if norm(&rr) <= target {
                return it;
            }
            r = rr;
            continue;
        }
        pre.apply(&s, &mut s_hat);
        a.spmv_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 || !tt.is_finite() {
            return it;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= target {
            r = residual_vec(a, b, x);
            if norm(&r) <= target {
                return it;
            }
        }
        if omega == 0.0 {
            return it;
        }
    }
    maxit
}

fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    pre: &Built,
    target: f64,
    maxit: usize,
    restart: usize,
) -> usize {
    let n = b.len();
    let m = restart.min(n.max(1));
    let mut total = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    while total < maxit {
        let r = residual_vec(a, b, x);
        let beta = norm(&r);
        if beta <= target || !beta.is_finite() {
            return total;
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            if total >= maxit {
                break;
            }
            total += 1;
            pre.apply(&basis[k], &mut z);
            a.spmv_into(&z, &mut w);
            for (j, vj) in basis.iter().enumerate() {
                h[j][k] = dot(&w, vj);
                for i in 0..n {
                    w[i] -= h[j][k] * vj[i];
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for j in 0..k {
                let tmp = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = tmp;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() <= target || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        if k_used == 0 {
            return total;
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (j, yj) in y.iter().enumerate() {
            for i in 0..n {
                update[i] += yj * basis[j][i];
            }
        }
        pre.apply(&update, &mut z);
        for i in 0..n {
            x[i] += z[i];
        }
    }
    total
}
