//! Switching projected subgradient method with Dykstra projections onto the
//! ground set intersected with the norm ball.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{InnerConfig, Outcome, Program, Trail};
use crate::vecops;

pub(crate) type Projection<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

/// Cyclic Dykstra projection of `x` onto the intersection of convex sets given
/// by their projections.
pub(crate) fn dykstra(
    x: &[f64],
    projections: &[Projection<'_>],
    max_iter: usize,
    tol: f64,
) -> Vec<f64> {
    let mut y = x.to_vec();
    let mut incr: Vec<Vec<f64>> = projections.iter().map(|_| alloc::vec![0.0; x.len()]).collect();
    for _ in 0..max_iter {
        let start = y.clone();
        for (proj, p) in projections.iter().zip(incr.iter_mut()) {
            let shifted: Vec<f64> = y.iter().zip(p.iter()).map(|(a, b)| a + b).collect();
            let z = proj(&shifted);
            for i in 0..y.len() {
                p[i] = shifted[i] - z[i];
            }
            y = z;
        }
        if vecops::dist(&start, &y) <= tol * vecops::norm(&y).max(1.0) {
            break;
        }
    }
    y
}

pub(crate) fn solve(p: &Program<'_>, cfg: &InnerConfig) -> Outcome {
    let ground = p.ground;
    let r = p.radius;
    let proj_ground = move |y: &[f64]| ground.project(y);
    let proj_ball = move |y: &[f64]| {
        let ny = vecops::norm(y);
        if ny > r {
            vecops::scaled(r / ny, y)
        } else {
            y.to_vec()
        }
    };
    let project = |y: &[f64]| dykstra(y, &[&proj_ground, &proj_ball], 100, 1e-12);

    let mut x = p.repair(&alloc::vec![0.0; p.dim]);
    let mut best = f64::INFINITY;
    let mut best_x = None;
    let mut trail = Trail::new(cfg.attain_window);
    let mut scale = None;
    let mut iterations = 0;
    let mut objective_steps = 0usize;

    while iterations < cfg.max_iter {
        iterations += 1;
        let mut worst: Option<(f64, Vec<f64>)> = None;
        for b in &p.constraints {
            if let Some(v) = b.violation(&x) {
                if worst.as_ref().is_none_or(|w| v.0 > w.0) {
                    worst = Some(v);
                }
            }
        }
        let next: Vec<f64> = match worst {
            Some((viol, s)) => {
                let ss = vecops::dot(&s, &s);
                if ss == 0.0 {
                    break;
                }
                x.iter().zip(&s).map(|(xi, si)| xi - viol / ss * si).collect()
            }
            None => {
                let e = (p.objective)(&x);
                if e.value < best {
                    best = e.value;
                    best_x = Some(x.clone());
                }
                if cfg.threshold.is_some_and(|t| best <= t) {
                    break;
                }
                let ns = vecops::norm(&e.subgradient);
                if ns == 0.0 {
                    break;
                }
                let a = *scale.get_or_insert_with(|| vecops::norm(&x).max(1.0) / ns.max(1.0));
                objective_steps += 1;
                let step = a / (objective_steps as f64).sqrt() / ns;
                x.iter().zip(&e.subgradient).map(|(xi, si)| xi - step * si).collect()
            }
        };
        x = project(&next);
        trail.push(&x);
    }
    let moved = trail.spread(&x);
    Outcome {
        lower: best - cfg.tol,
        lower_heuristic: true,
        point: best_x,
        upper: best,
        iterations,
        empty: false,
        empty_exact: false,
        moved,
        slope: None,
    }
}
