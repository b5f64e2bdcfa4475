//! Evaluation of the value functions `v(tau)`, `p(u)` and the perturbation
//! form of `v`, under a Euclidean norm cap `||x|| <= R`.
//!
//! Three engines are available:
//!
//! * an accelerated projected gradient method for instances whose level sets
//!   are gauge balls with exact projections and whose infeasibility has a
//!   smooth surrogate (BPDN, phase lift), with Frank-Wolfe lower bounds;
//! * a deep-cut ellipsoid method for small instances, with certified lower
//!   bounds on the capped problem;
//! * a projected subgradient method with Dykstra projections, for everything
//!   else, whose lower bounds are heuristic.
//!
//! A norm cap that binds at the returned certificate is the operational signal
//! of non-attainment. When the instance carries an analytic dual bound on `v`,
//! that bound becomes the reported lower bound; otherwise the capped lower
//! bound is reported and flagged as heuristic.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::Error;
use crate::problems::{
    FnEval, PerturbationInstance, ProblemInstance, ValueFunction, VariableSpace,
};
use crate::vecops;

mod ellipsoid;
mod gradient;
mod subgradient;

pub(crate) use subgradient::dykstra;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InnerMethod {
    /// Gradient method when the instance supports it, else ellipsoid up to
    /// 64 coordinates, else subgradient.
    #[default]
    Auto,
    Gradient,
    Ellipsoid,
    Subgradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerConfig {
    /// Requested `upper - lower`.
    pub tol: f64,
    /// Euclidean (Frobenius) radius `R` of the capped problem.
    pub norm_cap: f64,
    /// Absolute slack allowed on the query's constraint.
    pub feas_tol: f64,
    pub max_iter: usize,
    pub method: InnerMethod,
    /// Re-solve for the minimum-norm near-optimal point before reporting.
    pub polish: bool,
    pub attain_window: usize,
    pub attain_move: f64,
    /// The cap counts as hit when `||certificate|| >= (1 - cap_fraction) R`.
    pub cap_fraction: f64,
    /// Stop as soon as the value is certified above or below this level.
    pub threshold: Option<f64>,
}

impl Default for InnerConfig {
    fn default() -> Self {
        InnerConfig {
            tol: 1e-6,
            norm_cap: 1e3,
            feas_tol: 1e-8,
            max_iter: 200_000,
            method: InnerMethod::Auto,
            polish: true,
            attain_window: 100,
            attain_move: 1e-9,
            cap_fraction: 0.01,
            threshold: None,
        }
    }
}

impl InnerConfig {
    pub fn with(tol: f64, norm_cap: f64) -> Self {
        InnerConfig {
            tol,
            norm_cap,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.tol > 0.0) {
            return Err(Error::domain("tol must be positive"));
        }
        if !(self.norm_cap > 0.0) {
            return Err(Error::domain("norm_cap must be positive"));
        }
        if !(self.feas_tol >= 0.0) || !self.feas_tol.is_finite() {
            return Err(Error::domain("feas_tol must be finite and nonnegative"));
        }
        if !(0.0..1.0).contains(&self.cap_fraction) {
            return Err(Error::domain("cap_fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    /// `v(tau) = inf { g | f <= tau }`
    V,
    /// `p(u) = inf { f | g <= u }`
    P,
    /// `v(tau) = inf { penalty(u) | F(x, u) <= tau }`
    VPert,
}

/// One evaluation of a value function.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueEval {
    pub kind: QueryKind,
    pub param: f64,
    pub lower: f64,
    pub upper: f64,
    /// Point achieving `upper`; empty when the feasible set is empty.
    pub certificate: Vec<f64>,
    pub iterations: usize,
    pub norm_cap_hit: bool,
    pub attained_heuristic: bool,
    /// `lower` is a capped or heuristic bound rather than a certified bound on
    /// the uncapped value.
    pub lower_heuristic: bool,
    /// Estimated derivative of `v` at `param`, when the engine provides one.
    pub slope: Option<f64>,
    pub method: InnerMethod,
}

impl ValueEval {
    /// Whether the queried problem was certified infeasible.
    pub fn is_empty(&self) -> bool {
        self.lower == f64::INFINITY
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `minimize objective(x)` subject to `c(x) <= rhs` (up to its slack) for
/// every constraint, `x` in the ground set and `||x|| <= radius`.
pub(crate) struct Program<'a> {
    pub dim: usize,
    pub objective: &'a (dyn Fn(&[f64]) -> FnEval + Sync),
    pub constraints: Vec<Bound<'a>>,
    pub ground: crate::problems::GroundSet,
    pub radius: f64,
}

#[derive(Clone, Copy)]
pub(crate) struct Bound<'a> {
    pub c: &'a (dyn Fn(&[f64]) -> FnEval + Sync),
    pub rhs: f64,
    pub slack: f64,
}

impl Bound<'_> {
    /// Violation beyond the slack and a subgradient, if violated.
    pub fn violation(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let e = (self.c)(x);
        let viol = e.value - self.rhs;
        (viol > self.slack).then_some((viol, e.subgradient))
    }
}

impl Program<'_> {
    /// Ground-set projection followed by radial scaling into the ball; both
    /// keep the point in the ground set, which is a cone or the whole space.
    pub fn repair(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.ground.project(x);
        let ny = vecops::norm(&y);
        if ny > self.radius {
            let s = self.radius / ny;
            y.iter_mut().for_each(|v| *v *= s);
        }
        y
    }

    pub fn constraints_hold(&self, x: &[f64]) -> bool {
        self.constraints
            .iter()
            .all(|b| (b.c)(x).value - b.rhs <= b.slack)
    }
}

/// Raw engine output.
#[derive(Clone, Debug, Default)]
pub(crate) struct Outcome {
    pub point: Option<Vec<f64>>,
    pub upper: f64,
    pub lower: f64,
    pub lower_heuristic: bool,
    pub iterations: usize,
    /// Certified: no point satisfies the constraints within the cap.
    pub empty: bool,
    /// The emptiness holds without the cap as well.
    pub empty_exact: bool,
    /// Largest distance between the final iterate and the iterates of the
    /// trailing window; `0` after an exact stop, `inf` when unknown.
    pub moved: f64,
    pub slope: Option<f64>,
}

/// Trailing window of iterates for the attainment heuristic.
pub(crate) struct Trail {
    window: usize,
    points: VecDeque<Vec<f64>>,
}

impl Trail {
    pub fn new(window: usize) -> Self {
        Trail {
            window: window.max(1),
            points: VecDeque::new(),
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        if self.points.len() == self.window {
            self.points.pop_front();
        }
        self.points.push_back(x.to_vec());
    }

    pub fn full(&self) -> bool {
        self.points.len() == self.window
    }

    pub fn spread(&self, x: &[f64]) -> f64 {
        if !self.full() {
            return f64::INFINITY;
        }
        self.points
            .iter()
            .map(|p| vecops::dist(p, x))
            .fold(0.0, f64::max)
    }
}

fn check_param(value: f64, what: &'static str) -> Result<(), Error> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Evaluates `v(tau) = inf { g(x) | f(x) <= tau, x in X, ||x|| <= R }`.
pub fn eval_v(inst: &ProblemInstance, tau: f64, cfg: &InnerConfig) -> Result<ValueEval, Error> {
    check_param(tau, "tau")?;
    cfg.validate()?;
    evaluate(inst, QueryKind::V, tau, cfg)
}

/// Evaluates `p(u) = inf { f(x) | g(x) <= u, x in X, ||x|| <= R }`.
pub fn eval_p(inst: &ProblemInstance, u: f64, cfg: &InnerConfig) -> Result<ValueEval, Error> {
    check_param(u, "u")?;
    cfg.validate()?;
    if u < 0.0 && inst.infeasibility_nonnegative {
        return Err(Error::domain("u must be nonnegative for a nonnegative g"));
    }
    evaluate(inst, QueryKind::P, u, cfg)
}

/// Evaluates the perturbation form: the least penalty of the constraint
/// residuals over `{ f(x) <= tau, x in X, ||x|| <= R }`.
pub fn eval_v_pert(
    inst: &PerturbationInstance,
    tau: f64,
    cfg: &InnerConfig,
) -> Result<ValueEval, Error> {
    check_param(tau, "tau")?;
    cfg.validate()?;
    evaluate(inst.as_problem(), QueryKind::VPert, tau, cfg)
}

fn choose(inst: &ProblemInstance, kind: QueryKind, cfg: &InnerConfig) -> Result<InnerMethod, Error> {
    let gradient_ok = kind != QueryKind::P && inst.level.is_some() && inst.smooth.is_some();
    match cfg.method {
        InnerMethod::Auto if gradient_ok => Ok(InnerMethod::Gradient),
        InnerMethod::Auto if inst.dim() <= 64 => Ok(InnerMethod::Ellipsoid),
        InnerMethod::Auto => Ok(InnerMethod::Subgradient),
        InnerMethod::Gradient if !gradient_ok => Err(Error::domain(
            "the gradient engine needs a gauge level set and a smooth infeasibility",
        )),
        m => Ok(m),
    }
}

fn evaluate(
    inst: &ProblemInstance,
    kind: QueryKind,
    param: f64,
    cfg: &InnerConfig,
) -> Result<ValueEval, Error> {
    let method = choose(inst, kind, cfg)?;
    let (objective, constraint) = match kind {
        QueryKind::P => (&inst.objective, &inst.infeasibility),
        QueryKind::V | QueryKind::VPert => (&inst.infeasibility, &inst.objective),
    };
    let program = Program {
        dim: inst.dim(),
        objective: objective.as_ref(),
        constraints: alloc::vec![Bound {
            c: constraint.as_ref(),
            rhs: param,
            slack: cfg.feas_tol,
        }],
        ground: inst.ground,
        radius: cfg.norm_cap,
    };

    let mut out = match method {
        InnerMethod::Gradient => {
            let level = inst.level.expect("checked by choose");
            let smooth = inst.smooth.as_ref().expect("checked by choose");
            gradient::solve(&program, level, smooth, param, cfg)
        }
        InnerMethod::Ellipsoid => {
            let mut out = ellipsoid::solve_phase1(&program, cfg);
            if cfg.polish && !out.empty {
                ellipsoid::polish(&program, &mut out, cfg);
            }
            out
        }
        InnerMethod::Subgradient | InnerMethod::Auto => subgradient::solve(&program, cfg),
    };

    if out.empty {
        // emptiness inside the cap bounds v only through a dual bound
        let (lower, lower_heuristic) = match (out.empty_exact, &inst.dual_bound) {
            (true, _) => (f64::INFINITY, false),
            (false, Some(d)) if kind != QueryKind::P => (d(param), false),
            (false, _) => (f64::INFINITY, true),
        };
        return Ok(ValueEval {
            kind,
            param,
            lower,
            upper: f64::INFINITY,
            certificate: Vec::new(),
            iterations: out.iterations,
            norm_cap_hit: !out.empty_exact,
            attained_heuristic: false,
            lower_heuristic,
            slope: None,
            method,
        });
    }

    let Some(cert) = out.point.take() else {
        // no feasible point found and emptiness not certified
        return Ok(ValueEval {
            kind,
            param,
            lower: out.lower.min(f64::INFINITY),
            upper: f64::INFINITY,
            certificate: Vec::new(),
            iterations: out.iterations,
            norm_cap_hit: false,
            attained_heuristic: false,
            lower_heuristic: true,
            slope: None,
            method,
        });
    };

    let upper = objective(&cert).value;
    let norm = vecops::norm(&cert);
    let norm_cap_hit = norm >= (1.0 - cfg.cap_fraction) * cfg.norm_cap;
    let attained_heuristic = !norm_cap_hit && out.moved <= cfg.attain_move * norm.max(1.0);

    let dual = match kind {
        QueryKind::P => None,
        _ => inst.dual_bound.as_ref().map(|d| d(param)),
    };
    let (mut lower, lower_heuristic) = match (norm_cap_hit, dual) {
        (true, Some(d)) => (d, false),
        (true, None) => (out.lower, true),
        (false, Some(d)) if out.lower_heuristic => (d, false),
        (false, Some(d)) => (out.lower.max(d), false),
        (false, None) => (out.lower, out.lower_heuristic),
    };
    if lower > upper {
        lower = upper;
    }

    Ok(ValueEval {
        kind,
        param,
        lower,
        upper,
        certificate: cert,
        iterations: out.iterations,
        norm_cap_hit,
        attained_heuristic,
        lower_heuristic,
        slope: out.slope,
        method,
    })
}

impl ValueFunction for ProblemInstance {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, tau: f64, cfg: &InnerConfig) -> Result<ValueEval, Error> {
        eval_v(self, tau, cfg)
    }

    fn objective_at(&self, x: &[f64]) -> f64 {
        self.f(x)
    }

    fn infeasibility_at(&self, x: &[f64]) -> f64 {
        self.g(x)
    }

    fn tau_p_ref(&self) -> Option<f64> {
        self.tau_p_ref
    }

    fn tau_d_ref(&self) -> Option<f64> {
        self.tau_d_ref
    }

    fn bracket_hint(&self) -> Option<(f64, f64)> {
        self.bracket_hint
    }

    fn closed_form(&self, tau: f64) -> Option<f64> {
        ProblemInstance::closed_form(self, tau)
    }

    fn space(&self) -> VariableSpace {
        self.space
    }

    fn solve_primal(&self, cfg: &InnerConfig) -> Result<ValueEval, Error> {
        eval_p(self, 0.0, cfg)
    }
}

impl ValueFunction for PerturbationInstance {
    fn name(&self) -> &str {
        PerturbationInstance::name(self)
    }

    fn evaluate(&self, tau: f64, cfg: &InnerConfig) -> Result<ValueEval, Error> {
        eval_v_pert(self, tau, cfg)
    }

    fn objective_at(&self, x: &[f64]) -> f64 {
        self.as_problem().f(x)
    }

    fn infeasibility_at(&self, x: &[f64]) -> f64 {
        self.as_problem().g(x)
    }

    fn tau_p_ref(&self) -> Option<f64> {
        self.as_problem().tau_p_ref
    }

    fn tau_d_ref(&self) -> Option<f64> {
        self.as_problem().tau_d_ref
    }

    fn bracket_hint(&self) -> Option<(f64, f64)> {
        self.as_problem().bracket_hint
    }

    fn closed_form(&self, tau: f64) -> Option<f64> {
        self.as_problem().closed_form(tau)
    }

    fn space(&self) -> VariableSpace {
        self.as_problem().space
    }

    fn solve_primal(&self, cfg: &InnerConfig) -> Result<ValueEval, Error> {
        eval_p(self.as_problem(), 0.0, cfg)
    }
}
