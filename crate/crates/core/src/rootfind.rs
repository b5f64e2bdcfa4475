//! Leftmost root of `v(tau) <= epsilon` with inexact evaluations.
//!
//! Every evaluation runs with tolerance `epsilon / 4` and constraint slack
//! `min(1e-8, epsilon / 10)`. A point goes to the right end of the bracket
//! only when its evaluated upper bound is at most `epsilon`; everything else,
//! including evaluations whose bounds straddle `epsilon`, goes to the left
//! end. The reported root is the right end of the final bracket, the leftmost
//! point certified `epsilon`-infeasible.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::inner::{InnerConfig, ValueEval};
use crate::problems::ValueFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RootMethod {
    #[default]
    Bisection,
    Secant,
    Newton,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootConfig {
    /// Final bracket width.
    pub resolution: f64,
    pub max_evals: usize,
    /// Leftward expansion gives up beyond this bracket width.
    pub width_cap: f64,
    /// First width tried by the leftward expansion.
    pub initial_width: f64,
    /// Inner settings; `tol`, `feas_tol` and `threshold` are set per run.
    pub inner: InnerConfig,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            resolution: 1e-6,
            max_evals: 200,
            width_cap: 1e6,
            initial_width: 1.0,
            inner: InnerConfig::default(),
        }
    }
}

impl RootConfig {
    /// Evaluation settings for target `epsilon`.
    pub fn eval_config(&self, epsilon: f64) -> InnerConfig {
        InnerConfig {
            tol: epsilon / 4.0,
            feas_tol: 1e-8_f64.min(epsilon / 10.0),
            threshold: Some(epsilon),
            ..self.inner.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Endpoint,
    Bisection,
    Secant,
    Newton,
    Expansion,
}

/// One evaluation in a root-finding run.
#[derive(Clone, Debug, PartialEq)]
pub struct RootStep {
    pub tau: f64,
    pub kind: StepKind,
    pub lower: f64,
    pub upper: f64,
    pub norm_cap_hit: bool,
    pub attained_heuristic: bool,
    /// `upper <= epsilon`.
    pub feasible: bool,
    /// The bounds straddle `epsilon`.
    pub ambiguous: bool,
    pub inner_iterations: usize,
    /// Bracket after this evaluation.
    pub bracket: (f64, f64),
}

/// History of a root-finding run.
#[derive(Clone, Debug, PartialEq)]
pub struct RootTrace {
    pub instance: String,
    pub method: RootMethod,
    pub target_epsilon: f64,
    pub resolution: f64,
    pub eval_tol: f64,
    pub feas_tol: f64,
    pub initial_bracket: (f64, f64),
    pub iterates: Vec<RootStep>,
    pub final_bracket: (f64, f64),
    pub final_tau: f64,
    pub final_value: f64,
    pub final_certificate: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("invalid bracket: {diagnostic}")]
    Bracket {
        diagnostic: String,
        trace: Box<RootTrace>,
    },
    #[error("evaluation budget of {} exhausted", .trace.evaluations)]
    Budget { trace: Box<RootTrace> },
    #[error(transparent)]
    Eval(#[from] Error),
}

impl RootError {
    pub fn trace(&self) -> Option<&RootTrace> {
        match self {
            RootError::Bracket { trace, .. } | RootError::Budget { trace } => Some(trace),
            RootError::Eval(_) => None,
        }
    }
}

struct Run<'a, F: ValueFunction + ?Sized> {
    f: &'a F,
    epsilon: f64,
    inner: InnerConfig,
    trace: RootTrace,
    max_evals: usize,
}

impl<F: ValueFunction + ?Sized> Run<'_, F> {
    fn eval(&mut self, tau: f64, kind: StepKind) -> Result<ValueEval, RootError> {
        if self.trace.evaluations >= self.max_evals {
            return Err(RootError::Budget {
                trace: Box::new(self.trace.clone()),
            });
        }
        let e = self.f.evaluate(tau, &self.inner)?;
        self.trace.evaluations += 1;
        self.trace.iterates.push(RootStep {
            tau,
            kind,
            lower: e.lower,
            upper: e.upper,
            norm_cap_hit: e.norm_cap_hit,
            attained_heuristic: e.attained_heuristic,
            feasible: e.upper <= self.epsilon,
            ambiguous: e.lower <= self.epsilon && e.upper > self.epsilon,
            inner_iterations: e.iterations,
            bracket: self.trace.final_bracket,
        });
        Ok(e)
    }

    fn set_bracket(&mut self, lo: f64, hi: f64) {
        self.trace.final_bracket = (lo, hi);
        if let Some(last) = self.trace.iterates.last_mut() {
            last.bracket = (lo, hi);
        }
    }

    fn bracket_error(&self, diagnostic: &str) -> RootError {
        RootError::Bracket {
            diagnostic: String::from(diagnostic),
            trace: Box::new(self.trace.clone()),
        }
    }
}

fn validate(epsilon: f64, lo: f64, hi: f64, cfg: &RootConfig) -> Result<(), RootError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::domain("epsilon must be positive and finite").into());
    }
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::domain("bracket must be finite with lo < hi").into());
    }
    if !(cfg.resolution > 0.0) {
        return Err(Error::domain("resolution must be positive").into());
    }
    Ok(())
}

fn new_trace<F: ValueFunction + ?Sized>(
    f: &F,
    method: RootMethod,
    epsilon: f64,
    bracket: (f64, f64),
    cfg: &RootConfig,
    inner: &InnerConfig,
) -> RootTrace {
    RootTrace {
        instance: String::from(f.name()),
        method,
        target_epsilon: epsilon,
        resolution: cfg.resolution,
        eval_tol: inner.tol,
        feas_tol: inner.feas_tol,
        initial_bracket: bracket,
        iterates: Vec::new(),
        final_bracket: bracket,
        final_tau: bracket.1,
        final_value: f64::NAN,
        final_certificate: Vec::new(),
        evaluations: 0,
    }
}

/// Model step clipped into the open bracket; proposals within the resolution
/// of an end, or outside the bracket, become probes half a resolution inside
/// that end, which close the bracket when the model is right.
fn safeguard(proposal: f64, lo: f64, hi: f64, res: f64) -> Option<f64> {
    if !proposal.is_finite() {
        return None;
    }
    if proposal <= lo {
        let probe = lo + 0.5 * res;
        return (probe < hi).then_some(probe);
    }
    if proposal >= hi {
        let probe = hi - 0.5 * res;
        return (probe > lo).then_some(probe);
    }
    if proposal - lo < res {
        Some(lo + 0.5 * res)
    } else if hi - proposal < res {
        Some(hi - 0.5 * res)
    } else {
        Some(proposal)
    }
}

/// Finds the leftmost `tau` in `[lo, hi]` with `v(tau) <= epsilon`.
///
/// Requires `v(lo) > epsilon` certified by the evaluation's lower bound (or an
/// empty level set) and `v(hi) <= epsilon`.
pub fn find_leftmost_root<F: ValueFunction + ?Sized>(
    f: &F,
    epsilon: f64,
    bracket: (f64, f64),
    method: RootMethod,
    cfg: &RootConfig,
) -> Result<RootTrace, RootError> {
    let (lo, hi) = bracket;
    validate(epsilon, lo, hi, cfg)?;
    let inner = cfg.eval_config(epsilon);
    let mut run = Run {
        f,
        epsilon,
        trace: new_trace(f, method, epsilon, bracket, cfg, &inner),
        inner,
        max_evals: cfg.max_evals,
    };

    let e_lo = run.eval(lo, StepKind::Endpoint)?;
    // same acceptance as a bisection step, plus a lower bound within the
    // evaluation tolerance of epsilon
    if e_lo.upper <= epsilon {
        return Err(run.bracket_error("root at or left of bracket: v(lo) <= epsilon"));
    }
    if e_lo.lower <= epsilon - run.inner.tol {
        return Err(run.bracket_error(
            "root at or left of bracket: v(lo) not certified above epsilon",
        ));
    }
    let e_hi = run.eval(hi, StepKind::Endpoint)?;
    if e_hi.upper > epsilon {
        return Err(run.bracket_error("no root in bracket: v(hi) > epsilon"));
    }

    let (mut lo, mut hi) = (lo, hi);
    // left-side samples (tau, value, slope), most recent last
    let mut left: Vec<(f64, f64, Option<f64>)> = alloc::vec![(lo, e_lo.upper, e_lo.slope)];
    let mut cert = e_hi.certificate;
    let mut value_hi = e_hi.upper;
    let mut stalled = false;
    let res = cfg.resolution;

    while hi - lo > res {
        let width = hi - lo;
        let mid = 0.5 * (lo + hi);
        let (tau, kind) = match method {
            _ if stalled => (mid, StepKind::Bisection),
            RootMethod::Bisection => (mid, StepKind::Bisection),
            RootMethod::Secant => secant(&left, epsilon)
                .and_then(|p| safeguard(p, lo, hi, res))
                .map_or((mid, StepKind::Bisection), |t| (t, StepKind::Secant)),
            RootMethod::Newton => {
                let &(t0, v0, s0) = left.last().expect("left end sampled");
                let newton = s0
                    .filter(|s| *s < 0.0)
                    .map(|s| t0 - (v0 - epsilon) / s)
                    .and_then(|p| safeguard(p, lo, hi, res));
                match newton {
                    Some(t) => (t, StepKind::Newton),
                    None => secant(&left, epsilon)
                        .and_then(|p| safeguard(p, lo, hi, res))
                        .map_or((mid, StepKind::Bisection), |t| (t, StepKind::Secant)),
                }
            }
        };
        let e = run.eval(tau, kind)?;
        if e.upper <= epsilon {
            hi = tau;
            cert = e.certificate;
            value_hi = e.upper;
        } else {
            lo = tau;
            left.push((tau, e.upper, e.slope));
        }
        run.set_bracket(lo, hi);
        // a model step that fails to halve the bracket forces a bisection
        stalled = kind != StepKind::Bisection && hi - lo > 0.5 * width;
    }

    let mut trace = run.trace;
    trace.final_bracket = (lo, hi);
    trace.final_tau = hi;
    trace.final_value = value_hi;
    trace.final_certificate = cert;
    Ok(trace)
}

/// Secant through the two most recent left samples. On a convex `v` this
/// never overshoots the root.
fn secant(left: &[(f64, f64, Option<f64>)], epsilon: f64) -> Option<f64> {
    let [.., (t0, v0, _), (t1, v1, _)] = *left else {
        return None;
    };
    let denom = v1 - v0;
    if !(denom < 0.0) || !v1.is_finite() || !v0.is_finite() {
        return None;
    }
    Some(t1 - (v1 - epsilon) * (t1 - t0) / denom)
}

/// Outcome of [`expand_bracket_left`].
#[derive(Clone, Debug, PartialEq)]
pub struct BracketExpansion {
    /// `(lo, hi)` with `v(lo)` certified above `epsilon`; `None` when the
    /// width cap was reached first, in which case the gap may be infinite.
    pub bracket: Option<(f64, f64)>,
    pub probes: Vec<RootStep>,
    pub width_cap_hit: bool,
}

/// Moves `lo = hi - w` leftward, doubling `w` from `initial_width`, until
/// `v(lo)` is certified above `epsilon` or `w` passes the width cap (the last
/// probe is taken exactly at the cap). Probes with `v <= epsilon` pull `hi`
/// in.
pub fn expand_bracket_left<F: ValueFunction + ?Sized>(
    f: &F,
    epsilon: f64,
    hi: f64,
    cfg: &RootConfig,
) -> Result<BracketExpansion, RootError> {
    validate(epsilon, hi - 1.0, hi, cfg)?;
    if !(cfg.initial_width > 0.0) || !(cfg.width_cap >= cfg.initial_width) {
        return Err(Error::domain("need 0 < initial_width <= width_cap").into());
    }
    let inner = cfg.eval_config(epsilon);
    let mut run = Run {
        f,
        epsilon,
        trace: new_trace(f, RootMethod::Bisection, epsilon, (hi, hi), cfg, &inner),
        inner,
        max_evals: cfg.max_evals,
    };
    let anchor = hi;
    let mut hi = hi;
    let mut width = cfg.initial_width;
    loop {
        let lo = anchor - width;
        let e = run.eval(lo, StepKind::Expansion)?;
        if e.lower > epsilon {
            run.set_bracket(lo, hi);
            return Ok(BracketExpansion {
                bracket: Some((lo, hi)),
                probes: run.trace.iterates,
                width_cap_hit: false,
            });
        }
        if e.upper <= epsilon {
            hi = lo;
        }
        run.set_bracket(lo, hi);
        if width >= cfg.width_cap {
            return Ok(BracketExpansion {
                bracket: None,
                probes: run.trace.iterates,
                width_cap_hit: true,
            });
        }
        width = (2.0 * width).min(cfg.width_cap);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example2, VariableSpace};
    use alloc::vec;

    /// `v(tau) = max(0, a - tau)` with exact bounds.
    struct Affine {
        a: f64,
    }

    impl ValueFunction for Affine {
        fn name(&self) -> &str {
            "affine"
        }
        fn evaluate(&self, tau: f64, _: &InnerConfig) -> Result<ValueEval, Error> {
            let v = (self.a - tau).max(0.0);
            Ok(ValueEval {
                kind: crate::inner::QueryKind::V,
                param: tau,
                lower: v,
                upper: v,
                certificate: vec![tau],
                iterations: 1,
                norm_cap_hit: false,
                attained_heuristic: true,
                lower_heuristic: false,
                slope: Some(if tau < self.a { -1.0 } else { 0.0 }),
                method: crate::inner::InnerMethod::Auto,
            })
        }
        fn objective_at(&self, x: &[f64]) -> f64 {
            x[0]
        }
        fn infeasibility_at(&self, x: &[f64]) -> f64 {
            (self.a - x[0]).max(0.0)
        }
        fn tau_p_ref(&self) -> Option<f64> {
            Some(self.a)
        }
        fn tau_d_ref(&self) -> Option<f64> {
            Some(self.a)
        }
        fn bracket_hint(&self) -> Option<(f64, f64)> {
            None
        }
        fn closed_form(&self, tau: f64) -> Option<f64> {
            Some((self.a - tau).max(0.0))
        }
        fn space(&self) -> VariableSpace {
            VariableSpace::Vector(1)
        }
        fn solve_primal(&self, cfg: &InnerConfig) -> Result<ValueEval, Error> {
            let mut e = self.evaluate(self.a, cfg)?;
            e.kind = crate::inner::QueryKind::P;
            e.param = 0.0;
            e.upper = self.a;
            e.lower = self.a;
            Ok(e)
        }
    }

    fn cfg(res: f64) -> RootConfig {
        RootConfig {
            resolution: res,
            ..RootConfig::default()
        }
    }

    #[test]
    fn bisection_count_is_exact() {
        let f = Affine { a: 0.3 };
        let t = find_leftmost_root(&f, 1e-3, (-1.0, 1.0), RootMethod::Bisection, &cfg(1e-4)).unwrap();
        let expected = (2.0f64 / 1e-4).log2().ceil() as usize + 2;
        assert_eq!(t.evaluations, expected);
        assert!((t.final_tau - (0.3 - 1e-3)).abs() <= 1e-4);
        assert!(t.final_bracket.1 - t.final_bracket.0 <= 1e-4);
    }

    #[test]
    fn secant_exact_on_affine() {
        let f = Affine { a: 0.3 };
        let t = find_leftmost_root(&f, 1e-3, (-1.0, 1.0), RootMethod::Secant, &cfg(1e-6)).unwrap();
        // endpoints, a bisection, the secant step (rounded to just left of the
        // root), a forced bisection, a closing probe
        assert!(t.evaluations <= 6, "{:?}", t.iterates.iter().map(|s| (s.tau, s.kind)).collect::<Vec<_>>());
        assert!((t.final_tau - 0.299).abs() <= 1e-6);
    }

    #[test]
    fn newton_on_affine() {
        let f = Affine { a: 0.3 };
        let t = find_leftmost_root(&f, 1e-3, (-1.0, 1.0), RootMethod::Newton, &cfg(1e-6)).unwrap();
        assert!(t.evaluations <= 5, "{:?}", t.iterates.iter().map(|s| (s.tau, s.kind)).collect::<Vec<_>>());
        assert!((t.final_tau - 0.299).abs() <= 1e-6);
    }

    #[test]
    fn rejects_bad_brackets() {
        let f = Affine { a: 0.3 };
        let e = find_leftmost_root(&f, 1e-3, (0.5, 1.0), RootMethod::Bisection, &cfg(1e-4));
        match e {
            Err(RootError::Bracket { diagnostic, .. }) => {
                assert!(diagnostic.contains("root at or left of bracket"))
            }
            other => panic!("{other:?}"),
        }
        let e = find_leftmost_root(&f, 1e-3, (-1.0, 0.0), RootMethod::Bisection, &cfg(1e-4));
        assert!(matches!(e, Err(RootError::Bracket { .. })));
        let e = find_leftmost_root(&f, 0.0, (-1.0, 1.0), RootMethod::Bisection, &cfg(1e-4));
        assert!(matches!(e, Err(RootError::Eval(_))));
    }

    #[test]
    fn budget_error_carries_trace() {
        let f = Affine { a: 0.3 };
        let c = RootConfig {
            max_evals: 5,
            ..cfg(1e-9)
        };
        match find_leftmost_root(&f, 1e-3, (-1.0, 1.0), RootMethod::Bisection, &c) {
            Err(RootError::Budget { trace }) => assert_eq!(trace.evaluations, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expansion_finds_left_end() {
        let f = Affine { a: -5.0 };
        let x = expand_bracket_left(&f, 1e-3, 1.0, &cfg(1e-4)).unwrap();
        let (lo, hi) = x.bracket.unwrap();
        assert_eq!(lo, 1.0 - 8.0);
        assert_eq!(hi, 1.0 - 4.0);
    }

    #[test]
    fn example2_flat_region_bracket() {
        let c = cfg(1e-4);
        let t = find_leftmost_root(&example2(), 1e-3, (-1.5, -0.5), RootMethod::Secant, &c).unwrap();
        assert!((t.final_tau - (-1.0 - 1e-3f64.sqrt())).abs() <= 2e-4, "{}", t.final_tau);
    }
}
