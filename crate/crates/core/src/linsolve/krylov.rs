//! Right-preconditioned BiCGStab and restarted GMRES.

use super::matrix::{dot, norm2, BlockJacobi, BlockSparseMatrix};
use super::LinearSolution;
use crate::error::{Error, Result};

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn true_residual(a: &BlockSparseMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    Ok(norm2(&r))
}

pub fn bicgstab(a: &BlockSparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<LinearSolution> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(LinearSolution { x, iterations: 0, residual: 0.0 });
    }
    let m = BlockJacobi::new(a);
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let mut p = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut history = Vec::new();
    let target = tol * bnorm;

    for it in 1..=max_iter {
        let mut rho_new = dot(&r_hat, &r);
        if !rho_new.is_finite() {
            return Err(Error::Breakdown { method: "bicgstab", iterations: it });
        }
        if rho_new.abs() <= 1e-14 * norm2(&r_hat) * norm2(&r) {
            // r has gone orthogonal to the shadow vector: restart from r itself
            r_hat.copy_from_slice(&r);
            rho_new = dot(&r, &r);
            if rho_new <= 1e-300 {
                return Err(Error::Breakdown { method: "bicgstab", iterations: it });
            }
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply(&p, &mut p_hat);
        a.matvec_into(&p_hat, &mut v)?;
        let rv = dot(&r_hat, &v);
        if rv.abs() <= 1e-300 || !rv.is_finite() {
            return Err(Error::Breakdown { method: "bicgstab", iterations: it });
        }
        alpha = rho_new / rv;
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        if norm2(&s) <= target {
            axpy(&mut x, alpha, &p_hat);
            let res = true_residual(a, &x, b)? / bnorm;
            if res <= tol * 10.0 {
                return Ok(LinearSolution { x, iterations: it, residual: res });
            }
            r = b.iter().zip(a.matvec(&x)?).map(|(bi, ai)| bi - ai).collect();
            history.push(res);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|e| *e = 0.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            continue;
        }
        m.apply(&s, &mut s_hat);
        a.matvec_into(&s_hat, &mut t)?;
        let tt = dot(&t, &t);
        if tt <= 1e-300 {
            return Err(Error::Breakdown { method: "bicgstab", iterations: it });
        }
        omega = dot(&t, &s) / tt;
        if omega == 0.0 || !omega.is_finite() {
            return Err(Error::Breakdown { method: "bicgstab", iterations: it });
        }
        axpy(&mut x, alpha, &p_hat);
        axpy(&mut x, omega, &s_hat);
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        let rel = norm2(&r) / bnorm;
        history.push(rel);
        if rel <= tol {
            let res = true_residual(a, &x, b)? / bnorm;
            if res <= tol * 10.0 {
                return Ok(LinearSolution { x, iterations: it, residual: res });
            }
        }
    }
    let residual = true_residual(a, &x, b)? / bnorm;
    Err(Error::NotConverged {
        method: "bicgstab",
        iterations: max_iter,
        residual,
        history,
    })
}

/// GMRES(`restart`) with modified Gram-Schmidt and Givens rotations.
pub fn gmres(a: &BlockSparseMatrix, b: &[f64], tol: f64, max_iter: usize, restart: usize) -> Result<LinearSolution> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let restart = restart.max(1);
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(LinearSolution { x, iterations: 0, residual: 0.0 });
    }
    let m = BlockJacobi::new(a);
    let mut history = Vec::new();
    let mut total = 0;
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];

    while total < max_iter {
        let ax = a.matvec(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta <= tol * bnorm {
            return Ok(LinearSolution { x, iterations: total, residual: beta / bnorm });
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..restart {
            if total >= max_iter {
                break;
            }
            total += 1;
            m.apply(&basis[k], &mut z);
            a.matvec_into(&z, &mut w)?;
            for (i, q) in basis.iter().enumerate() {
                h[i][k] = dot(&w, q);
                axpy(&mut w, -h[i][k], q);
            }
            let wn = norm2(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let tmp = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = tmp;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                return Err(Error::Breakdown { method: "gmres", iterations: total });
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            let rel = g[k + 1].abs() / bnorm;
            history.push(rel);
            if rel <= tol || wn <= 1e-300 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut u = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut u, *yi, &basis[i]);
        }
        m.apply(&u, &mut z);
        axpy(&mut x, 1.0, &z);

        let res = true_residual(a, &x, b)? / bnorm;
        if res <= tol * 10.0 && history.last().is_some_and(|&h| h <= tol) {
            return Ok(LinearSolution { x, iterations: total, residual: res });
        }
    }
    let residual = true_residual(a, &x, b)? / bnorm;
    if residual <= tol {
        return Ok(LinearSolution { x, iterations: total, residual });
    }
    Err(Error::NotConverged {
        method: "gmres",
        iterations: total,
        residual,
        history,
    })
}
