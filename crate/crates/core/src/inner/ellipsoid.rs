//! Deep-cut ellipsoid method in square-root form.
//!
//! The ellipsoid is `{c + L z : ||z|| <= 1}`. At a feasible centre the
//! objective subgradient `s` gives the certified bound
//! `obj(x) >= obj(c) - ||L^T s||` for every `x` in the ellipsoid, which
//! contains every minimizer of the capped problem.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{Bound, InnerConfig, Outcome, Program, Trail};
use crate::problems::FnEval;
use crate::vecops;

/// Relative accuracy of phase one, and the near-optimality slack of the
/// minimum-norm polish.
const PHASE1_REL: f64 = 1e-10;
const PHASE1_ABS: f64 = 1e-16;
const POLISH_SLACK_REL: f64 = 1e-9;
const POLISH_SLACK_ABS: f64 = 1e-15;
const COLLAPSE_REL: f64 = 1e-14;
const POLISH_COLLAPSE_REL: f64 = 1e-11;

struct Settings {
    center: Vec<f64>,
    radius: f64,
    tol: f64,
    target_rel: f64,
    target_abs: f64,
    collapse_rel: f64,
    max_iter: usize,
    threshold: Option<f64>,
    window: usize,
    incumbent: Option<(Vec<f64>, f64)>,
}

struct Ellipsoid {
    n: usize,
    c: Vec<f64>,
    /// Row-major `n x n`.
    l: Vec<f64>,
}

enum Step {
    Continue,
    /// The cut leaves nothing of the ellipsoid.
    Exhausted,
}

impl Ellipsoid {
    fn ball(center: Vec<f64>, radius: f64) -> Self {
        let n = center.len();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            l[i * n + i] = radius;
        }
        Ellipsoid { n, c: center, l }
    }

    fn lt(&self, s: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (si, row) in s.iter().zip(self.l.chunks_exact(n)) {
            if *si != 0.0 {
                vecops::axpy(*si, row, &mut out);
            }
        }
        out
    }

    fn size(&self) -> f64 {
        vecops::norm(&self.l)
    }

    /// Keeps `{x : s^T (x - c) <= -depth}`, `depth >= 0`.
    fn cut(&mut self, s: &[f64], depth: f64) -> Step {
        let n = self.n;
        let lts = self.lt(s);
        let ns = vecops::norm(&lts);
        if ns == 0.0 || !ns.is_finite() {
            return if depth > 0.0 { Step::Exhausted } else { Step::Continue };
        }
        let alpha = depth / ns;
        if alpha >= 1.0 {
            return Step::Exhausted;
        }
        let u: Vec<f64> = lts.iter().map(|v| v / ns).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| vecops::dot(&self.l[i * n..(i + 1) * n], &u))
            .collect();
        if n == 1 {
            vecops::axpy(-(1.0 + alpha) / 2.0, &b, &mut self.c);
            self.l[0] *= (1.0 - alpha) / 2.0;
            return Step::Continue;
        }
        let nf = n as f64;
        let step = (1.0 + nf * alpha) / (nf + 1.0);
        let delta = nf * nf * (1.0 - alpha * alpha) / (nf * nf - 1.0);
        let sigma = 2.0 * (1.0 + nf * alpha) / ((nf + 1.0) * (1.0 + alpha));
        let beta = 1.0 - (1.0 - sigma).max(0.0).sqrt();
        vecops::axpy(-step, &b, &mut self.c);
        let sd = delta.sqrt();
        for (bi, row) in b.iter().zip(self.l.chunks_exact_mut(n)) {
            for (r, uj) in row.iter_mut().zip(&u) {
                *r = sd * (*r - beta * bi * uj);
            }
        }
        Step::Continue
    }
}

/// Most violated requirement at `x`: value of the violation and a subgradient
/// of a convex function that is `<= 0` on the feasible set.
fn separate(p: &Program<'_>, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let nx = vecops::norm(x);
    if nx > p.radius {
        return Some((nx - p.radius, vecops::scaled(1.0 / nx, x)));
    }
    if let Some(cut) = p.ground.separate(x) {
        return Some(cut);
    }
    let mut worst: Option<(f64, Vec<f64>)> = None;
    for b in &p.constraints {
        if let Some((viol, s)) = b.violation(x) {
            // cut against the relaxed constraint c <= rhs + slack
            let depth = viol - b.slack;
            if worst.as_ref().is_none_or(|w| depth > w.0) {
                worst = Some((depth, s));
            }
        }
    }
    worst
}

fn run(p: &Program<'_>, set: Settings) -> Outcome {
    let mut e = Ellipsoid::ball(set.center, set.radius);
    let mut trail = Trail::new(set.window);
    let (mut best_x, mut best) = match set.incumbent {
        Some((x, v)) => (Some(x), v),
        None => (None, f64::INFINITY),
    };
    let mut lower = f64::NEG_INFINITY;
    let mut moved = f64::INFINITY;
    let mut empty = false;
    let mut iterations = 0;
    let target = |best: f64| set.tol.min((set.target_rel * best.abs()).max(set.target_abs));

    while iterations < set.max_iter {
        iterations += 1;
        trail.push(&e.c);
        let step = match separate(p, &e.c) {
            Some((viol, s)) => {
                let repaired = p.repair(&e.c);
                if p.constraints_hold(&repaired) {
                    let v = (p.objective)(&repaired).value;
                    if v < best {
                        best = v;
                        best_x = Some(repaired);
                    }
                }
                e.cut(&s, viol)
            }
            None => {
                let FnEval { value, subgradient } = (p.objective)(&e.c);
                if value < best {
                    best = value;
                    best_x = Some(e.c.clone());
                }
                let ns = vecops::norm(&e.lt(&subgradient));
                if ns == 0.0 {
                    lower = lower.max(value);
                    moved = 0.0;
                    break;
                }
                lower = lower.max(value - ns);
                e.cut(&subgradient, value - best)
            }
        };
        if let Step::Exhausted = step {
            if best_x.is_some() {
                lower = lower.max(best);
                moved = 0.0;
            } else {
                empty = true;
            }
            break;
        }
        if best_x.is_some() && best - lower <= target(best) {
            break;
        }
        // a capped lower bound above the threshold says nothing about the
        // uncapped value until the cap is known to be inactive, so only the
        // upper side stops early
        if set.threshold.is_some_and(|t| best <= t) {
            break;
        }
        if e.size() <= set.collapse_rel * vecops::norm(&e.c).max(1.0) {
            break;
        }
    }
    if moved != 0.0 {
        moved = trail.spread(&e.c);
    }
    Outcome {
        point: best_x,
        upper: best,
        lower: lower.min(best),
        lower_heuristic: false,
        iterations,
        empty,
        empty_exact: false,
        moved,
        slope: None,
    }
}

/// Solves the capped problem to relative accuracy.
pub(crate) fn solve_phase1(p: &Program<'_>, cfg: &InnerConfig) -> Outcome {
    run(
        p,
        Settings {
            center: vec![0.0; p.dim],
            radius: p.radius,
            tol: cfg.tol,
            target_rel: PHASE1_REL,
            target_abs: PHASE1_ABS,
            collapse_rel: COLLAPSE_REL,
            max_iter: cfg.max_iter,
            threshold: cfg.threshold,
            window: cfg.attain_window,
            incumbent: None,
        },
    )
}

/// Replaces the certificate by the minimum-norm point whose objective is
/// within a small slack of the phase-one value.
pub(crate) fn polish(p: &Program<'_>, out: &mut Outcome, cfg: &InnerConfig) {
    let Some(x) = out.point.clone() else {
        return;
    };
    let level = out.upper + (POLISH_SLACK_REL * out.upper.abs()).max(POLISH_SLACK_ABS);
    let half_norm = |y: &[f64]| FnEval {
        value: 0.5 * vecops::dot(y, y),
        subgradient: y.to_vec(),
    };
    let mut constraints = p.constraints.clone();
    constraints.push(Bound {
        c: p.objective,
        rhs: level,
        slack: 0.0,
    });
    let q = Program {
        dim: p.dim,
        objective: &half_norm,
        constraints,
        ground: p.ground,
        radius: p.radius,
    };
    let nx = vecops::norm(&x);
    let start = (nx * (1.0 + 1e-6) + 1e-12).min(p.radius);
    let inc = 0.5 * nx * nx;
    let res = run(
        &q,
        Settings {
            center: vec![0.0; p.dim],
            radius: start.max(nx),
            tol: f64::INFINITY,
            target_rel: 0.0,
            target_abs: 0.0,
            collapse_rel: POLISH_COLLAPSE_REL,
            max_iter: cfg.max_iter,
            threshold: None,
            window: cfg.attain_window,
            incumbent: Some((x, inc)),
        },
    );
    out.iterations += res.iterations;
    out.moved = res.moved;
    if let Some(y) = res.point {
        out.point = Some(y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::GroundSet;

    #[test]
    fn quadratic_in_box_free_space() {
        // minimize (x - 3)^2 + (y + 1)^2 subject to x <= 1
        let obj = |x: &[f64]| FnEval {
            value: (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2),
            subgradient: vec![2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)],
        };
        let con = |x: &[f64]| FnEval {
            value: x[0],
            subgradient: vec![1.0, 0.0],
        };
        let p = Program {
            dim: 2,
            objective: &obj,
            constraints: vec![Bound {
                c: &con,
                rhs: 1.0,
                slack: 1e-10,
            }],
            ground: GroundSet::Whole,
            radius: 100.0,
        };
        let out = solve_phase1(&p, &InnerConfig::with(1e-9, 100.0));
        assert!((out.upper - 4.0).abs() < 1e-8, "{}", out.upper);
        assert!(out.lower <= out.upper && out.upper - out.lower <= 1e-9);
        let x = out.point.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-4 && (x[1] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn one_dimensional_cut() {
        let obj = |x: &[f64]| FnEval {
            value: (x[0] - 0.3).abs(),
            subgradient: vec![(x[0] - 0.3).signum()],
        };
        let p = Program {
            dim: 1,
            objective: &obj,
            constraints: Vec::new(),
            ground: GroundSet::Whole,
            radius: 10.0,
        };
        let out = solve_phase1(&p, &InnerConfig::with(1e-10, 10.0));
        assert!(out.upper < 1e-9);
        assert!(out.lower >= -1e-9);
    }

    #[test]
    fn infeasible_constraint_is_certified_empty() {
        let obj = |x: &[f64]| FnEval {
            value: x[0],
            subgradient: vec![1.0, 0.0],
        };
        // ||x||_1 <= -1
        let con = |x: &[f64]| FnEval {
            value: x[0].abs() + x[1].abs(),
            subgradient: vec![x[0].signum(), x[1].signum()],
        };
        let p = Program {
            dim: 2,
            objective: &obj,
            constraints: vec![Bound {
                c: &con,
                rhs: -1.0,
                slack: 0.0,
            }],
            ground: GroundSet::Whole,
            radius: 5.0,
        };
        let out = solve_phase1(&p, &InnerConfig::default());
        assert!(out.empty);
    }
}
