//! Duality-gap reports, divergence probes, regularization and the inverse
//! relation `p(v(tau)) = tau`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::Error;
use crate::inner::{eval_p, eval_v, InnerConfig};
use crate::problems::{oracle, FnEval, ProblemInstance, ValueFunction};
use crate::rootfind::{
    expand_bracket_left, find_leftmost_root, RootConfig, RootError, RootMethod, RootStep,
    RootTrace,
};
use crate::sweep::Executor;
use crate::vecops;

#[derive(Clone, Debug, PartialEq)]
pub struct GapConfig {
    pub epsilon: f64,
    pub method: RootMethod,
    pub root: RootConfig,
    /// The search starts at `tau_p + margin`.
    pub margin: f64,
    /// The gap counts as zero when it is at most `zero_tol_rel * max(1, |tau_p|)`.
    pub zero_tol_rel: f64,
    /// Norm caps of the divergence probe, increasing.
    pub probe_caps: Vec<f64>,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            epsilon: 1e-6,
            method: RootMethod::Bisection,
            root: RootConfig::default(),
            margin: 1.0,
            zero_tol_rel: 1e-3,
            probe_caps: alloc::vec![1e2, 1e3, 1e4],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapClass {
    Zero,
    Finite,
    Infinite,
}

impl GapClass {
    pub fn as_str(self) -> &'static str {
        match self {
            GapClass::Zero => "zero",
            GapClass::Finite => "finite",
            GapClass::Infinite => "infinite",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TauPSource {
    Reference,
    DirectSolve,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbePoint {
    pub cap: f64,
    pub lower: f64,
    pub upper: f64,
    pub minimizer_norm: f64,
    pub norm_cap_hit: bool,
}

/// Capped values `v_R(tau)` for increasing caps `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceProbe {
    pub tau: f64,
    pub points: Vec<ProbePoint>,
    /// Least-squares slope of `log v_R` against `log R`; present when the caps
    /// span at least two decades and at least two values are positive.
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub instance: String,
    pub epsilon: f64,
    /// `-inf` when the leftward expansion reached its width cap.
    pub tau_d_est: f64,
    pub tau_p: f64,
    pub tau_p_source: TauPSource,
    pub gap: f64,
    pub classification: GapClass,
    pub expansion: Vec<RootStep>,
    pub width_cap_hit: bool,
    pub trace: Option<RootTrace>,
    pub divergence: Option<DivergenceProbe>,
    pub regularization_suggestion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GapError {
    #[error("no primal reference: {0}")]
    NoPrimal(String),
    #[error("{error}")]
    Root {
        error: RootError,
        partial: Box<GapReport>,
    },
    #[error(transparent)]
    Eval(#[from] Error),
}

fn log_slope(points: &[ProbePoint]) -> Option<f64> {
    let (first, last) = (points.first()?, points.last()?);
    if (last.cap / first.cap).log10() < 2.0 - 1e-12 {
        return None;
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.upper > 0.0 && p.upper.is_finite())
        .map(|p| (p.cap.ln(), p.upper.ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

/// Evaluates `v` at `tau` once per cap. `cfg.norm_cap` and `cfg.threshold`
/// are overridden.
pub fn divergence_probe<F, E>(
    f: &F,
    tau: f64,
    caps: &[f64],
    cfg: &InnerConfig,
    exec: &E,
) -> Result<DivergenceProbe, Error>
where
    F: ValueFunction + ?Sized,
    E: Executor,
{
    if caps.is_empty() || caps.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::domain("caps must be positive and finite"));
    }
    if caps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("caps must be increasing"));
    }
    let evals = exec.map(caps.len(), |i| {
        let c = InnerConfig {
            norm_cap: caps[i],
            threshold: None,
            ..cfg.clone()
        };
        f.evaluate(tau, &c)
    });
    let mut points = Vec::with_capacity(caps.len());
    for (cap, e) in caps.iter().zip(evals) {
        let e = e?;
        points.push(ProbePoint {
            cap: *cap,
            lower: e.lower,
            upper: e.upper,
            minimizer_norm: vecops::norm(&e.certificate),
            norm_cap_hit: e.norm_cap_hit,
        });
    }
    let slope = log_slope(&points);
    Ok(DivergenceProbe { tau, points, slope })
}

fn primal_value<F: ValueFunction + ?Sized>(
    f: &F,
    cfg: &GapConfig,
) -> Result<(f64, TauPSource), GapError> {
    if let Some(t) = f.tau_p_ref() {
        return Ok((t, TauPSource::Reference));
    }
    let inner = InnerConfig {
        tol: cfg.root.resolution,
        threshold: None,
        ..cfg.root.inner.clone()
    };
    let e = f.solve_primal(&inner)?;
    if e.attained_heuristic && e.upper.is_finite() {
        Ok((e.upper, TauPSource::DirectSolve))
    } else {
        Err(GapError::NoPrimal(String::from(
            "no reference value and the direct solve of p(0) was not attained",
        )))
    }
}

/// Locates the leftmost root of `v` and compares it with the primal value.
///
/// The primal value comes from the instance's reference, or else from an
/// attained direct solve. The search starts at `tau_p + margin` and expands
/// leftward; reaching the width cap classifies the gap as infinite.
pub fn gap_report<F, E>(f: &F, cfg: &GapConfig, exec: &E) -> Result<GapReport, GapError>
where
    F: ValueFunction + ?Sized,
    E: Executor,
{
    let (tau_p, tau_p_source) = primal_value(f, cfg)?;
    let eps = cfg.epsilon;
    let hi = tau_p + cfg.margin;
    let zero_tol = cfg.zero_tol_rel * tau_p.abs().max(1.0);
    let mut report = GapReport {
        instance: String::from(f.name()),
        epsilon: eps,
        tau_d_est: f64::NAN,
        tau_p,
        tau_p_source,
        gap: f64::NAN,
        classification: GapClass::Finite,
        expansion: Vec::new(),
        width_cap_hit: false,
        trace: None,
        divergence: None,
        regularization_suggestion: None,
    };
    let partial = |error: RootError, report: &GapReport| GapError::Root {
        error,
        partial: Box::new(report.clone()),
    };

    let expansion = expand_bracket_left(f, eps, hi, &cfg.root).map_err(|e| partial(e, &report))?;
    report.expansion = expansion.probes;
    report.width_cap_hit = expansion.width_cap_hit;
    match expansion.bracket {
        None => {
            report.tau_d_est = f64::NEG_INFINITY;
            report.gap = f64::INFINITY;
            report.classification = GapClass::Infinite;
        }
        Some(bracket) => {
            let trace = find_leftmost_root(f, eps, bracket, cfg.method, &cfg.root)
                .map_err(|e| partial(e, &report))?;
            report.tau_d_est = trace.final_tau;
            report.gap = tau_p - trace.final_tau;
            report.classification = if report.gap <= zero_tol {
                GapClass::Zero
            } else {
                GapClass::Finite
            };
            report.trace = Some(trace);
        }
    }

    if report.classification != GapClass::Zero {
        let tau = if report.tau_d_est.is_finite() {
            0.5 * (report.tau_d_est + tau_p)
        } else {
            tau_p - 1.0
        };
        let probe_cfg = InnerConfig {
            tol: eps / 4.0,
            feas_tol: 1e-8_f64.min(eps / 10.0),
            ..cfg.root.inner.clone()
        };
        report.divergence = Some(divergence_probe(f, tau, &cfg.probe_caps, &probe_cfg, exec)?);
        // the regularized optimum exceeds tau_p by mu times the norm of a
        // primal solution
        report.regularization_suggestion = Some(zero_tol / 10.0);
    }
    Ok(report)
}

/// `f(x) + mu ||x||` in place of `f`. The level set and closed form are
/// dropped; the dual bound stays valid since the level sets only shrink.
/// Reference values survive only when `f` is constant on the feasible set
/// with a known smallest feasible norm, in which case the regularized optimal
/// value is `tau_p + mu * norm` and duality is strong.
pub fn regularize(inst: &ProblemInstance, mu: f64) -> Result<ProblemInstance, Error> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::domain("mu must be positive and finite"));
    }
    let base = inst.objective.clone();
    let objective = oracle(move |x| {
        let FnEval {
            value,
            mut subgradient,
        } = base(x);
        let nx = vecops::norm(x);
        if nx > 0.0 {
            vecops::axpy(mu / nx, x, &mut subgradient);
        }
        FnEval {
            value: value + mu * nx,
            subgradient,
        }
    });
    let mut out = inst.clone();
    out.name = format!("{}+reg({})", inst.name, mu);
    out.objective = objective;
    out.level = None;
    out.smooth = None;
    out.closed_form_v = None;
    out.witnesses = Vec::new();
    out.bracket_hint = None;
    match (inst.tau_p_ref, inst.feasible_min_norm) {
        (Some(tp), Some(norm)) => {
            let t = tp + mu * norm;
            out.tau_p_ref = Some(t);
            out.tau_d_ref = Some(t);
            out.bracket_hint = Some((tp, t + 1.0));
        }
        _ => {
            out.tau_p_ref = None;
            out.tau_d_ref = None;
        }
    }
    out.feasible_min_norm = None;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum InverseCheck {
    Holds { u: f64, p_of_v: f64 },
    Fails { u: f64, p_of_v: f64 },
    /// `v(tau)` is infinite or not attained, so the relation is not expected.
    Inapplicable { reason: String },
}

impl InverseCheck {
    pub fn holds(&self) -> bool {
        matches!(self, InverseCheck::Holds { .. })
    }
}

/// Tests `|p(v(tau)) - tau| <= tol`. Both evaluations run at accuracy
/// `tol / 8`.
pub fn check_inverse(
    inst: &ProblemInstance,
    tau: f64,
    tol: f64,
    cfg: &InnerConfig,
) -> Result<InverseCheck, Error> {
    if !(tol > 0.0) {
        return Err(Error::domain("tol must be positive"));
    }
    let c = InnerConfig {
        tol: cfg.tol.min(tol / 8.0),
        threshold: None,
        ..cfg.clone()
    };
    let v = eval_v(inst, tau, &c)?;
    if !v.upper.is_finite() {
        return Ok(InverseCheck::Inapplicable {
            reason: String::from("v(tau) is infinite"),
        });
    }
    if !v.attained_heuristic {
        return Ok(InverseCheck::Inapplicable {
            reason: String::from("v(tau) is not attained"),
        });
    }
    let u = if inst.infeasibility_nonnegative {
        v.upper.max(0.0)
    } else {
        v.upper
    };
    let p = eval_p(inst, u, &c)?;
    let p_of_v = p.upper;
    Ok(if (p_of_v - tau).abs() <= tol {
        InverseCheck::Holds { u, p_of_v }
    } else {
        InverseCheck::Fails { u, p_of_v }
    })
}
