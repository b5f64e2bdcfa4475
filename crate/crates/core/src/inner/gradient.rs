//! Accelerated projected gradient on `min h(x)` over a gauge ball, with
//! backtracking, adaptive restart and Frank-Wolfe lower bounds.
//!
//! The infeasibility is `g = phi(h)` for a nondecreasing `phi`, so bounds on
//! `h` map to bounds on `g`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{dykstra, InnerConfig, Outcome, Program, Trail};
use crate::problems::{LevelSet, SmoothPart};
use crate::vecops;

const EXTRA_ITER: usize = 20_000;

struct Feasible {
    level: LevelSet,
    tau: f64,
    radius: f64,
    /// The gauge ball of radius `tau` fits inside the norm cap.
    inside: bool,
}

impl Feasible {
    fn project(&self, x: &[f64]) -> Vec<f64> {
        let ball = |y: &[f64]| self.level.project(y, self.tau).expect("tau checked");
        if self.inside {
            return ball(x);
        }
        let r = self.radius;
        let cap = |y: &[f64]| {
            let ny = vecops::norm(y);
            if ny > r {
                vecops::scaled(r / ny, y)
            } else {
                y.to_vec()
            }
        };
        // end on the level set so the iterate is feasible for the query
        let y = dykstra(x, &[&cap, &ball], 200, 1e-12);
        ball(&y)
    }
}

pub(crate) fn solve(
    p: &Program<'_>,
    level: LevelSet,
    smooth: &SmoothPart,
    tau: f64,
    cfg: &InnerConfig,
) -> Outcome {
    if level.project(&alloc::vec![0.0; p.dim], tau).is_none() {
        return Outcome {
            empty: true,
            empty_exact: true,
            moved: 0.0,
            ..Outcome::default()
        };
    }
    let set = Feasible {
        level,
        tau,
        radius: p.radius,
        inside: tau <= p.radius,
    };
    let h = |x: &[f64]| (smooth.h)(x);
    let phi = smooth.transform;

    let mut x = set.project(&alloc::vec![0.0; p.dim]);
    let mut hx = h(&x).value;
    let mut best = (x.clone(), hx);
    let mut y = x.clone();
    let mut t = 1.0;
    let mut lip = 1.0;
    let mut h_lower = if smooth.nonnegative { 0.0 } else { f64::NEG_INFINITY };
    let mut trail = Trail::new(cfg.attain_window);
    let mut iterations = 0;
    let mut converged_at = None;
    let budget = cfg.max_iter;

    while iterations < budget {
        iterations += 1;
        let hy = h(&y);
        let z = level.lmo(&hy.subgradient, tau);
        let fw = hy.value + vecops::dot(&hy.subgradient, &vecops::sub(&z, &y));
        if fw > h_lower {
            h_lower = fw;
        }

        // backtracking step from y
        let (x_new, h_new) = loop {
            let trial: Vec<f64> = y
                .iter()
                .zip(&hy.subgradient)
                .map(|(yi, gi)| yi - gi / lip)
                .collect();
            let cand = set.project(&trial);
            let d = vecops::sub(&cand, &y);
            let hc = h(&cand).value;
            let model = hy.value + vecops::dot(&hy.subgradient, &d) + 0.5 * lip * vecops::dot(&d, &d);
            if hc <= model + 1e-12 * hy.value.abs().max(1e-300) || lip > 1e300 {
                break (cand, hc);
            }
            lip *= 2.0;
        };

        // gradient-based adaptive restart
        let step = vecops::sub(&x_new, &x);
        let restart = vecops::dot(&vecops::sub(&y, &x_new), &step) > 0.0 || h_new > hx;
        // plain projected gradient once converged: its iterates settle
        // linearly under the error bounds these instances satisfy
        let (t_next, momentum) = if restart || converged_at.is_some() {
            (1.0, 0.0)
        } else {
            let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            (tn, (t - 1.0) / tn)
        };
        y = x_new.iter().zip(&step).map(|(a, s)| a + momentum * s).collect();
        x = x_new;
        hx = h_new;
        if hx < best.1 {
            best = (x.clone(), hx);
        }
        t = t_next;
        if converged_at.is_none() {
            lip *= 0.95;
        }
        trail.push(&x);

        let g_up = phi.apply(best.1);
        let g_lo = phi.apply(h_lower);
        if converged_at.is_none() {
            let decided = cfg
                .threshold
                .is_some_and(|thr| g_up <= thr || g_lo > thr);
            if g_up - g_lo <= cfg.tol || decided || best.1 - h_lower <= 1e-15 * best.1.abs() {
                if !cfg.polish {
                    break;
                }
                converged_at = Some(iterations);
            }
        }
        if let Some(k) = converged_at {
            let still = trail.spread(&x) <= cfg.attain_move * vecops::norm(&x).max(1.0);
            if still || iterations >= k + EXTRA_ITER {
                break;
            }
        }
    }

    let moved = trail.spread(&x);
    let x = best.0;
    let g_x = (p.objective)(&x).value;
    let g_lo = phi.apply(h_lower).min(g_x);
    let hxe = h(&x);
    let unit = level.lmo(&hxe.subgradient, 1.0);
    let slope = phi.derivative(hxe.value) * vecops::dot(&hxe.subgradient, &unit);
    Outcome {
        moved,
        point: Some(x),
        upper: g_x,
        lower: g_lo,
        lower_heuristic: false,
        iterations,
        empty: false,
        empty_exact: false,
        slope: Some(slope),
    }
}
