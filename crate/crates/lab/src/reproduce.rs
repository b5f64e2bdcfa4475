//! Canonical pipelines for the library examples, each ending in pass/fail
//! checks.

use levelset_core::problems::{
    example1, example2, example2_recast, phaselift_toy, univariate_failure,
};
use levelset_core::{
    check_inverse, divergence_probe, eval_v, eval_v_pert, find_leftmost_root, gap_report,
    regularize, Executor, GapClass, GapConfig, InnerConfig, InverseCheck, RootConfig, RootMethod,
};

use crate::direct;
use crate::fixtures;
use crate::output::fmt_num;

pub const EXAMPLES: &[&str] = &[
    "example1",
    "example2",
    "example3",
    "univariate",
    "bpdn",
    "phaselift",
];

#[derive(Clone, Debug)]
pub struct Check {
    pub example: &'static str,
    pub detail: String,
    pub pass: bool,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{}: {} {verdict}", self.example, self.detail)
    }
}

fn check(example: &'static str, detail: String, pass: bool) -> Check {
    Check {
        example,
        detail,
        pass,
    }
}

fn fail(example: &'static str, what: &str, err: impl std::fmt::Display) -> Check {
    check(example, format!("{what}: error: {err}"), false)
}

fn run_example1<E: Executor>(exec: &E) -> Vec<Check> {
    let ex = "example1";
    let mut cfg = GapConfig::default();
    cfg.root.inner.norm_cap = 1e6;
    match gap_report(&example1(), &cfg, exec) {
        Ok(r) => {
            let max_lower = r.expansion.iter().map(|s| s.lower).fold(f64::MIN, f64::max);
            vec![
                check(
                    ex,
                    format!("gap={}", r.classification.as_str()),
                    r.classification == GapClass::Infinite,
                ),
                check(
                    ex,
                    format!(
                        "expansion probes={} width_cap_hit={} max_lower={}",
                        r.expansion.len(),
                        r.width_cap_hit,
                        fmt_num(max_lower)
                    ),
                    r.width_cap_hit && max_lower <= 1e-6,
                ),
            ]
        }
        Err(e) => vec![fail(ex, "gap report", e)],
    }
}

fn run_example2<E: Executor>(exec: &E) -> Vec<Check> {
    let ex = "example2";
    let inst = example2();
    let mut out = Vec::new();
    match gap_report(&inst, &GapConfig::default(), exec) {
        Ok(r) => {
            out.push(check(
                ex,
                format!("tau_d={:.2} tau_p={:.2} gap={:.2}", r.tau_d_est, r.tau_p, r.gap),
                (r.tau_d_est + 1.0).abs() <= 1e-2
                    && r.tau_p.abs() <= 1e-6
                    && r.classification == GapClass::Finite,
            ));
        }
        Err(e) => out.push(fail(ex, "gap report", e)),
    }
    let cfg = InnerConfig::with(1e-6, 1e3);
    let flat: Vec<_> = [-0.75, -0.5, -0.25]
        .iter()
        .map(|t| eval_v(&inst, *t, &cfg))
        .collect();
    match flat.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(evals) => {
            let worst = evals.iter().map(|e| e.upper).fold(f64::MIN, f64::max);
            let caps = evals.iter().all(|e| e.norm_cap_hit);
            out.push(check(
                ex,
                format!("flat region max v_R={} cap_hit={caps}", fmt_num(worst)),
                worst <= 1e-4 && caps,
            ));
        }
        Err(e) => out.push(fail(ex, "flat region", e)),
    }
    match divergence_probe(&inst, -0.5, &[1e2, 1e3, 1e4], &cfg, exec) {
        Ok(p) => {
            let s = p.slope.unwrap_or(f64::NAN);
            out.push(check(ex, format!("divergence slope={s:.3}"), (s + 2.0).abs() <= 0.3));
        }
        Err(e) => out.push(fail(ex, "divergence probe", e)),
    }
    let left = InnerConfig::with(1e-4, 1e3);
    match (eval_v(&inst, -2.0, &left), eval_v(&inst, -1.5, &left)) {
        (Ok(a), Ok(b)) => out.push(check(
            ex,
            format!("v(-2)={:.4} v(-1.5)={:.4}", a.upper, b.upper),
            (a.upper - 1.0).abs() <= 1e-3 && (b.upper - 0.25).abs() <= 1e-3,
        )),
        (Err(e), _) | (_, Err(e)) => out.push(fail(ex, "left of the dual value", e)),
    }
    for mu in [0.1, 0.01] {
        let reg = regularize(&inst, mu).expect("mu is positive");
        let cfg = GapConfig {
            epsilon: 1e-14,
            ..GapConfig::default()
        };
        match gap_report(&reg, &cfg, exec) {
            Ok(r) => out.push(check(
                ex,
                format!(
                    "regularized mu={mu} root={:.4} gap={}",
                    r.tau_d_est,
                    r.classification.as_str()
                ),
                (r.tau_d_est - mu).abs() <= 1e-3 && r.classification == GapClass::Zero,
            )),
            Err(e) => out.push(fail(ex, "regularized gap report", e)),
        }
    }
    out
}

fn run_example3<E: Executor>(exec: &E) -> Vec<Check> {
    let ex = "example3";
    let inst = example2_recast();
    let mut out = Vec::new();
    match gap_report(&inst, &GapConfig::default(), exec) {
        Ok(r) => out.push(check(
            ex,
            format!("tau_d={:.2} tau_p={:.2} gap={:.2}", r.tau_d_est, r.tau_p, r.gap),
            (r.tau_d_est + 1.0).abs() <= 1e-2 && r.classification == GapClass::Finite,
        )),
        Err(e) => out.push(fail(ex, "gap report", e)),
    }
    let cfg = InnerConfig::with(1e-6, 1e3);
    match (eval_v_pert(&inst, -0.5, &cfg), eval_v_pert(&inst, -2.0, &cfg)) {
        (Ok(a), Ok(b)) => out.push(check(
            ex,
            format!(
                "v(-0.5)={} cap_hit={} v(-2)={:.4}",
                fmt_num(a.upper),
                a.norm_cap_hit,
                b.upper
            ),
            a.upper <= 1e-4 && a.norm_cap_hit && (b.upper - 0.5).abs() <= 1e-3,
        )),
        (Err(e), _) | (_, Err(e)) => out.push(fail(ex, "evaluations", e)),
    }
    out
}

fn run_univariate<E: Executor>(exec: &E) -> Vec<Check> {
    let ex = "univariate";
    let inst = univariate_failure();
    let cfg = InnerConfig::default();
    let mut out = Vec::new();
    match (eval_v(&inst, 1.0, &cfg), eval_v(&inst, -0.5, &cfg)) {
        (Ok(a), Ok(b)) => out.push(check(
            ex,
            format!("v(1)={:.4} v(-0.5)={}", a.upper, fmt_num(b.upper)),
            (a.upper + 1.0).abs() <= 1e-6 && b.upper == f64::INFINITY,
        )),
        (Err(e), _) | (_, Err(e)) => out.push(fail(ex, "evaluations", e)),
    }
    let verdicts: Result<Vec<_>, _> = [0.5, 1.0, -0.5]
        .iter()
        .map(|t| check_inverse(&inst, *t, 1e-4, &cfg))
        .collect();
    match verdicts {
        Ok(v) => {
            let ok = matches!(v[0], InverseCheck::Fails { .. })
                && matches!(v[1], InverseCheck::Fails { .. })
                && matches!(v[2], InverseCheck::Inapplicable { .. });
            out.push(check(
                ex,
                "inverse relation fails at tau=0.5,1 and is inapplicable at tau=-0.5".into(),
                ok,
            ));
        }
        Err(e) => out.push(fail(ex, "inverse relation", e)),
    }
    match gap_report(&inst, &GapConfig::default(), exec) {
        Ok(r) => out.push(check(
            ex,
            format!("tau_d={:.4} gap={}", r.tau_d_est, r.classification.as_str()),
            r.classification == GapClass::Zero,
        )),
        Err(e) => out.push(fail(ex, "gap report", e)),
    }
    out
}

fn run_bpdn() -> Vec<Check> {
    let ex = "bpdn";
    let list = fixtures::bundled();
    let Some(fx) = fixtures::lookup(&list, 1, 20, 50, 3, 0.1) else {
        return vec![check(ex, "bundled fixture missing".into(), false)];
    };
    let inst = match fx.instance() {
        Ok(i) => i,
        Err(e) => return vec![fail(ex, "instance", e)],
    };
    let mut out = Vec::new();
    let hint = inst.bracket_hint.expect("bpdn has a bracket hint");
    match find_leftmost_root(&inst, 1e-6, hint, RootMethod::Secant, &RootConfig::default()) {
        Ok(t) => {
            let rel = (t.final_tau - fx.tau_p_ref).abs() / fx.tau_p_ref.abs();
            let res = inst.g(&t.final_certificate) + fx.noise_u;
            out.push(check(
                ex,
                format!(
                    "gap=0 root matches direct solve (root={:.6} direct={:.6} rel={} residual={:.6})",
                    t.final_tau,
                    fx.tau_p_ref,
                    fmt_num(rel),
                    res
                ),
                rel <= 1e-3 && res <= 0.1 + 1e-4,
            ));
        }
        Err(e) => out.push(fail(ex, "root", e)),
    }
    match direct::solve_instance(&inst) {
        Ok(s) => out.push(check(
            ex,
            format!("fixture reproduces (direct={:.12})", s.tau_p),
            (s.tau_p - fx.tau_p_ref).abs() <= 1e-10 * fx.tau_p_ref.max(1.0),
        )),
        Err(e) => out.push(fail(ex, "direct solve", e)),
    }
    for frac in [0.5, 0.7, 0.9] {
        let tau = frac * fx.tau_p_ref;
        match check_inverse(&inst, tau, 1e-4, &InnerConfig::default()) {
            Ok(c) => out.push(check(ex, format!("inverse relation at tau={tau:.4}: {c:?}"), c.holds())),
            Err(e) => out.push(fail(ex, "inverse relation", e)),
        }
    }
    out
}

fn run_phaselift<E: Executor>(exec: &E) -> Vec<Check> {
    let ex = "phaselift";
    let inst = match phaselift_toy(5, 1) {
        Ok(i) => i,
        Err(e) => return vec![fail(ex, "instance", e)],
    };
    match gap_report(&inst, &GapConfig::default(), exec) {
        Ok(r) => vec![check(
            ex,
            format!(
                "gap={} tau_d={:.6} tau_p={:.6}",
                r.classification.as_str(),
                r.tau_d_est,
                r.tau_p
            ),
            r.classification == GapClass::Zero,
        )],
        Err(e) => vec![fail(ex, "gap report", e)],
    }
}

/// Runs the pipeline of `example`; `None` for an unknown name.
pub fn run<E: Executor>(example: &str, exec: &E) -> Option<Vec<Check>> {
    Some(match example {
        "example1" => run_example1(exec),
        "example2" => run_example2(exec),
        "example3" => run_example3(exec),
        "univariate" => run_univariate(exec),
        "bpdn" => run_bpdn(),
        "phaselift" => run_phaselift(exec),
        _ => return None,
    })
}
