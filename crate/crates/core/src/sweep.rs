//! Grid evaluation of `v(tau)` and `p(u)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::Error;
use crate::inner::{eval_p, InnerConfig, ValueEval};
use crate::problems::{ProblemInstance, ValueFunction};

/// Runs independent jobs `0..n`; results come back in index order.
pub trait Executor {
    fn map<R, F>(&self, n: usize, job: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync;
}

/// Runs jobs one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<R, F>(&self, n: usize, job: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync,
    {
        (0..n).map(job).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    VOfTau,
    POfU,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::VOfTau => "v_of_tau",
            SweepAxis::POfU => "p_of_u",
        }
    }
}

/// One grid point. A failed evaluation keeps its message in `error` and
/// reports `lower = upper = NaN`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub param: f64,
    pub lower: f64,
    pub upper: f64,
    pub cap_hit: bool,
    pub attained: bool,
    pub error: Option<String>,
}

impl SweepPoint {
    fn from_result(param: f64, r: Result<ValueEval, Error>) -> Self {
        match r {
            Ok(e) => SweepPoint {
                param,
                lower: e.lower,
                upper: e.upper,
                cap_hit: e.norm_cap_hit,
                attained: e.attained_heuristic,
                error: None,
            },
            Err(e) => SweepPoint {
                param,
                lower: f64::NAN,
                upper: f64::NAN,
                cap_hit: false,
                attained: false,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub instance: String,
    pub tol: f64,
    pub norm_cap: f64,
    pub seed: Option<u64>,
    pub points: Vec<SweepPoint>,
}

impl SweepTable {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<(), Error> {
    if grid.is_empty() {
        return Err(Error::domain("grid is empty"));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("grid"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("grid must be strictly increasing"));
    }
    Ok(())
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![start],
        _ => {
            let h = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + h * i as f64 })
                .collect()
        }
    }
}

/// Evaluates `v` at every grid point. Per-point failures are recorded in the
/// table, never propagated.
pub fn sweep_v<F, E>(
    f: &F,
    seed: Option<u64>,
    grid: &[f64],
    cfg: &InnerConfig,
    exec: &E,
) -> Result<SweepTable, Error>
where
    F: ValueFunction + ?Sized,
    E: Executor,
{
    check_grid(grid)?;
    cfg.validate()?;
    let points = exec.map(grid.len(), |i| {
        SweepPoint::from_result(grid[i], f.evaluate(grid[i], cfg))
    });
    Ok(SweepTable {
        axis: SweepAxis::VOfTau,
        instance: String::from(f.name()),
        tol: cfg.tol,
        norm_cap: cfg.norm_cap,
        seed,
        points,
    })
}

/// Evaluates `p` at every grid point.
pub fn sweep_p<E: Executor>(
    inst: &ProblemInstance,
    grid: &[f64],
    cfg: &InnerConfig,
    exec: &E,
) -> Result<SweepTable, Error> {
    check_grid(grid)?;
    cfg.validate()?;
    let points = exec.map(grid.len(), |i| {
        SweepPoint::from_result(grid[i], eval_p(inst, grid[i], cfg))
    });
    Ok(SweepTable {
        axis: SweepAxis::POfU,
        instance: inst.name.clone(),
        tol: cfg.tol,
        norm_cap: cfg.norm_cap,
        seed: inst.seed,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example2, univariate_failure};

    #[test]
    fn grid_validation() {
        let inst = example2();
        let cfg = InnerConfig::default();
        assert!(sweep_v(&inst, None, &[], &cfg, &Sequential).is_err());
        assert!(sweep_v(&inst, None, &[0.0, 0.0], &cfg, &Sequential).is_err());
        assert!(sweep_v(&inst, None, &[1.0, f64::NAN], &cfg, &Sequential).is_err());
    }

    #[test]
    fn linspace_hits_both_ends() {
        let g = linspace(-2.0, 1.0, 13);
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[12], 1.0);
        assert!((g[4] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn univariate_case_split() {
        let t = sweep_v(
            &univariate_failure(),
            None,
            &[-1.0, -0.5, 0.5, 1.0],
            &InnerConfig::default(),
            &Sequential,
        )
        .unwrap();
        let up: Vec<f64> = t.points.iter().map(|p| p.upper).collect();
        assert_eq!(up[0], f64::INFINITY);
        assert_eq!(up[1], f64::INFINITY);
        assert!((up[2] + 1.0).abs() < 1e-6);
        assert!((up[3] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_u_is_tagged_not_fatal() {
        let t = sweep_p(&example2(), &[-1.0, 0.5], &InnerConfig::default(), &Sequential).unwrap();
        assert!(t.points[0].error.is_some());
        assert!(t.points[0].upper.is_nan());
        assert!(t.points[1].error.is_none());
    }
}
