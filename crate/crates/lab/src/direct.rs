//! High-accuracy direct solve of basis pursuit denoising,
//! `minimize ||x||_1 subject to ||A x - b|| <= u`.
//!
//! The solution is a LASSO solution `argmin ||A x - b||^2 / 2 + lambda ||x||_1`
//! for the `lambda` at which the residual norm equals `u`. Proximal gradient
//! identifies the support and signs; on a fixed support the LASSO path is
//! affine in `lambda`, so the matching `lambda` and the solution follow in
//! closed form and are accepted once the optimality conditions check out.

use levelset_core::linalg::{sym_eig, SymMatrix};
use levelset_core::problems::{BpdnData, InstanceData};
use levelset_core::{Error, ProblemInstance};

#[derive(Clone, Debug)]
pub struct DirectSolution {
    pub x: Vec<f64>,
    pub tau_p: f64,
    pub lambda: f64,
    pub residual_norm: f64,
    /// Largest violation of the optimality conditions on the final support.
    pub kkt_violation: f64,
    pub lasso_solves: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn column(d: &BpdnData, j: usize) -> Vec<f64> {
    (0..d.m).map(|i| d.a[i * d.n + j]).collect()
}

/// `b - A x`
fn residual(d: &BpdnData, x: &[f64]) -> Vec<f64> {
    d.residual(x).iter().map(|v| -v).collect()
}

/// Solves `G y = r` for symmetric positive definite `G`.
fn spd_solve(g: &SymMatrix, r: &[f64]) -> Option<Vec<f64>> {
    let eig = sym_eig(g);
    let top = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut y = vec![0.0; r.len()];
    for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
        if *lambda <= 1e-13 * top {
            return None;
        }
        let c = dot(v, r) / lambda;
        for (yi, vi) in y.iter_mut().zip(v) {
            *yi += c * vi;
        }
    }
    Some(y)
}

/// Proximal gradient with momentum restart on the LASSO objective, stopped on
/// a relative duality gap.
fn lasso(d: &BpdnData, lambda: f64, lip: f64, warm: &[f64], gap_rel: f64) -> Vec<f64> {
    let soft = |v: f64, t: f64| v.signum() * (v.abs() - t).max(0.0);
    let mut x = warm.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let bb = dot(&d.b, &d.b);
    for _ in 0..200_000 {
        let r = residual(d, &y);
        let grad = d.apply_transpose(&r);
        let x_new: Vec<f64> = y
            .iter()
            .zip(&grad)
            .map(|(yi, gi)| soft(yi + gi / lip, lambda / lip))
            .collect();
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let restart = x_new
            .iter()
            .zip(&x)
            .zip(&y)
            .map(|((xn, xo), yo)| (yo - xn) * (xn - xo))
            .sum::<f64>()
            > 0.0;
        if restart {
            t = 1.0;
            y = x_new.clone();
        } else {
            let beta = (t - 1.0) / t_new;
            y = x_new
                .iter()
                .zip(&x)
                .map(|(xn, xo)| xn + beta * (xn - xo))
                .collect();
            t = t_new;
        }
        x = x_new;

        let r = residual(d, &x);
        let primal = 0.5 * dot(&r, &r) + lambda * x.iter().map(|v| v.abs()).sum::<f64>();
        let corr = max_abs(&d.apply_transpose(&r));
        let s = if corr > lambda { lambda / corr } else { 1.0 };
        let diff: f64 = d.b.iter().zip(&r).map(|(b, ri)| (b - s * ri).powi(2)).sum();
        let dual = 0.5 * bb - 0.5 * diff;
        if primal - dual <= gap_rel * primal.max(1e-300) {
            break;
        }
    }
    x
}

/// Exact solution on the support and signs of `x`, with the `lambda` at which
/// the residual norm equals `u`. Returns `None` when the support is singular
/// or the target residual is out of reach on it.
fn polish(d: &BpdnData, x: &[f64]) -> Option<DirectSolution> {
    let scale = max_abs(x);
    let support: Vec<usize> = (0..d.n).filter(|&j| x[j].abs() > 1e-9 * scale).collect();
    if support.is_empty() || support.len() > d.m {
        return None;
    }
    let signs: Vec<f64> = support.iter().map(|&j| x[j].signum()).collect();
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| column(d, j)).collect();
    let gram = SymMatrix::from_fn(support.len(), |i, j| dot(&cols[i], &cols[j]));
    let atb: Vec<f64> = cols.iter().map(|c| dot(c, &d.b)).collect();
    // x_S(lambda) = p - lambda q
    let p = spd_solve(&gram, &atb)?;
    let q = spd_solve(&gram, &signs)?;
    let combine = |coef: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; d.m];
        for (c, col) in coef.iter().zip(&cols) {
            for (o, a) in out.iter_mut().zip(col) {
                *o += c * a;
            }
        }
        out
    };
    // r(lambda) = r0 + lambda w with r0 orthogonal to w
    let ap = combine(&p);
    let r0: Vec<f64> = d.b.iter().zip(&ap).map(|(b, v)| b - v).collect();
    let w = combine(&q);
    let u2 = d.noise_u * d.noise_u;
    let rest = u2 - dot(&r0, &r0);
    let ww = dot(&w, &w);
    if !(rest > 0.0) || !(ww > 0.0) {
        return None;
    }
    let lambda = (rest / ww).sqrt();
    let xs: Vec<f64> = p.iter().zip(&q).map(|(pi, qi)| pi - lambda * qi).collect();
    if xs.iter().zip(&signs).any(|(v, s)| v * s <= 0.0) {
        return None;
    }
    let mut full = vec![0.0; d.n];
    for (&j, v) in support.iter().zip(&xs) {
        full[j] = *v;
    }
    let r = residual(d, &full);
    let corr = d.apply_transpose(&r);
    let mut kkt = 0.0f64;
    for (j, c) in corr.iter().enumerate() {
        let v = match support.binary_search(&j) {
            Ok(i) => (c - lambda * signs[i]).abs(),
            Err(_) => (c.abs() - lambda).max(0.0),
        };
        kkt = kkt.max(v / lambda);
    }
    if kkt > 1e-9 {
        return None;
    }
    Some(DirectSolution {
        tau_p: xs.iter().map(|v| v.abs()).sum(),
        residual_norm: norm(&r),
        x: full,
        lambda,
        kkt_violation: kkt,
        lasso_solves: 0,
    })
}

/// Solves the instance to the accuracy of its optimality conditions
/// (relative violation at most `1e-9`, residual norm exact to rounding).
pub fn solve(d: &BpdnData) -> Result<DirectSolution, Error> {
    if norm(&d.b) <= d.noise_u {
        return Ok(DirectSolution {
            x: vec![0.0; d.n],
            tau_p: 0.0,
            lambda: max_abs(&d.apply_transpose(&d.b)),
            residual_norm: norm(&d.b),
            kkt_violation: 0.0,
            lasso_solves: 0,
        });
    }
    let gram = SymMatrix::from_fn(d.m, |i, j| {
        dot(&d.a[i * d.n..(i + 1) * d.n], &d.a[j * d.n..(j + 1) * d.n])
    });
    let lip = sym_eig(&gram).values.iter().fold(0.0f64, |m, v| m.max(*v));
    // residual norm increases with lambda; bisect on log lambda
    let mut hi = max_abs(&d.apply_transpose(&d.b));
    let mut lo = hi * 1e-12;
    let mut x = vec![0.0; d.n];
    for solves in 1..=200 {
        let lambda = (lo * hi).sqrt();
        x = lasso(d, lambda, lip, &x, 1e-14);
        if let Some(mut s) = polish(d, &x) {
            s.lasso_solves = solves;
            return Ok(s);
        }
        if norm(&residual(d, &x)) > d.noise_u {
            hi = lambda;
        } else {
            lo = lambda;
        }
    }
    Err(Error::Domain(
        "direct solve did not identify a consistent support".into(),
    ))
}

pub fn solve_instance(inst: &ProblemInstance) -> Result<DirectSolution, Error> {
    match &inst.data {
        InstanceData::Bpdn(d) => solve(d),
        _ => Err(Error::Domain(format!(
            "direct solve needs a bpdn instance, got `{}`",
            inst.name
        ))),
    }
}
