//! Output documents.
//!
//! Every run writes one JSON document
//! `{tool, version, command, config, seed, result}`; sweeps may instead write
//! CSV. Numbers are written in shortest round-trip form, so equal runs give
//! byte-identical files. Non-finite numbers are the strings `"inf"`, `"-inf"`
//! and `"nan"`.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use levelset_core::{
    DivergenceProbe, GapClass, GapReport, InverseCheck, RootMethod, RootStep, RootTrace,
    SweepTable, TauPSource, ValueEval,
};
use levelset_core::rootfind::StepKind;
use levelset_core::{InnerMethod, QueryKind};

pub const TOOL: &str = "levelset-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::from("nan")
    } else if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        Value::from(x)
    }
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Reads a number written by [`num`].
pub fn read_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

fn pair(p: (f64, f64)) -> Value {
    json!([num(p.0), num(p.1)])
}

/// CSV and text form of a number: shortest round-trip scientific notation,
/// or `inf`, `-inf`, `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:e}")
    }
}

pub fn method_name(m: RootMethod) -> &'static str {
    match m {
        RootMethod::Bisection => "bisection",
        RootMethod::Secant => "secant",
        RootMethod::Newton => "newton",
    }
}

fn step_kind(k: StepKind) -> &'static str {
    match k {
        StepKind::Endpoint => "endpoint",
        StepKind::Bisection => "bisection",
        StepKind::Secant => "secant",
        StepKind::Newton => "newton",
        StepKind::Expansion => "expansion",
    }
}

fn inner_method(m: InnerMethod) -> &'static str {
    match m {
        InnerMethod::Auto => "auto",
        InnerMethod::Gradient => "gradient",
        InnerMethod::Ellipsoid => "ellipsoid",
        InnerMethod::Subgradient => "subgradient",
    }
}

fn query_kind(k: QueryKind) -> &'static str {
    match k {
        QueryKind::V => "v",
        QueryKind::P => "p",
        QueryKind::VPert => "v_pert",
    }
}

pub fn step_json(s: &RootStep) -> Value {
    json!({
        "tau": num(s.tau),
        "kind": step_kind(s.kind),
        "lower": num(s.lower),
        "upper": num(s.upper),
        "norm_cap_hit": s.norm_cap_hit,
        "attained": s.attained_heuristic,
        "feasible": s.feasible,
        "ambiguous": s.ambiguous,
        "inner_iterations": s.inner_iterations,
        "bracket": pair(s.bracket),
    })
}

pub fn trace_json(t: &RootTrace) -> Value {
    json!({
        "instance": t.instance,
        "method": method_name(t.method),
        "target_epsilon": num(t.target_epsilon),
        "resolution": num(t.resolution),
        "eval_tol": num(t.eval_tol),
        "feas_tol": num(t.feas_tol),
        "initial_bracket": pair(t.initial_bracket),
        "final_bracket": pair(t.final_bracket),
        "final_tau": num(t.final_tau),
        "final_value": num(t.final_value),
        "final_certificate": nums(&t.final_certificate),
        "evaluations": t.evaluations,
        "iterates": t.iterates.iter().map(step_json).collect::<Vec<_>>(),
    })
}

pub fn eval_json(e: &ValueEval) -> Value {
    json!({
        "kind": query_kind(e.kind),
        "param": num(e.param),
        "lower": num(e.lower),
        "upper": num(e.upper),
        "norm_cap_hit": e.norm_cap_hit,
        "attained": e.attained_heuristic,
        "lower_heuristic": e.lower_heuristic,
        "iterations": e.iterations,
        "method": inner_method(e.method),
        "slope": opt_num(e.slope),
        "certificate": nums(&e.certificate),
    })
}

pub fn probe_json(p: &DivergenceProbe) -> Value {
    json!({
        "tau": num(p.tau),
        "slope": opt_num(p.slope),
        "points": p.points.iter().map(|q| json!({
            "cap": num(q.cap),
            "lower": num(q.lower),
            "upper": num(q.upper),
            "minimizer_norm": num(q.minimizer_norm),
            "norm_cap_hit": q.norm_cap_hit,
        })).collect::<Vec<_>>(),
    })
}

pub fn class_name(c: GapClass) -> &'static str {
    c.as_str()
}

pub fn report_json(r: &GapReport) -> Value {
    json!({
        "instance": r.instance,
        "epsilon": num(r.epsilon),
        "tau_d_est": num(r.tau_d_est),
        "tau_p": num(r.tau_p),
        "tau_p_source": match r.tau_p_source {
            TauPSource::Reference => "reference",
            TauPSource::DirectSolve => "direct_solve",
        },
        "gap": num(r.gap),
        "classification": class_name(r.classification),
        "width_cap_hit": r.width_cap_hit,
        "regularization_suggestion": opt_num(r.regularization_suggestion),
        "divergence": r.divergence.as_ref().map_or(Value::Null, probe_json),
        "expansion": r.expansion.iter().map(step_json).collect::<Vec<_>>(),
        "trace": r.trace.as_ref().map_or(Value::Null, trace_json),
    })
}

pub fn inverse_json(c: &InverseCheck) -> Value {
    match c {
        InverseCheck::Holds { u, p_of_v } => {
            json!({"status": "holds", "u": num(*u), "p_of_v": num(*p_of_v)})
        }
        InverseCheck::Fails { u, p_of_v } => {
            json!({"status": "fails", "u": num(*u), "p_of_v": num(*p_of_v)})
        }
        InverseCheck::Inapplicable { reason } => {
            json!({"status": "inapplicable", "reason": reason})
        }
    }
}

pub fn sweep_json(t: &SweepTable) -> Value {
    json!({
        "axis": t.axis.as_str(),
        "instance": t.instance,
        "tol": num(t.tol),
        "norm_cap": num(t.norm_cap),
        "points": t.points.iter().map(|p| json!({
            "param": num(p.param),
            "lower": num(p.lower),
            "upper": num(p.upper),
            "cap_hit": p.cap_hit,
            "attained": p.attained,
            "error": p.error,
        })).collect::<Vec<_>>(),
    })
}

/// The run document.
pub fn document(command: &str, config: Value, seed: Option<u64>, result: Value) -> Value {
    let mut m = Map::new();
    m.insert("tool".into(), TOOL.into());
    m.insert("version".into(), VERSION.into());
    m.insert("command".into(), command.into());
    m.insert("config".into(), config);
    m.insert("seed".into(), seed.map_or(Value::Null, Value::from));
    m.insert("result".into(), result);
    Value::Object(m)
}

pub fn to_text(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("values serialize");
    s.push('\n');
    s
}

/// CSV with `#` metadata lines, then `param,lower,upper,cap_hit,attained`.
pub fn sweep_csv(command: &str, config: &Value, t: &SweepTable) -> String {
    let mut s = String::new();
    let seed = t.seed.map_or("none".to_string(), |v| v.to_string());
    let _ = writeln!(s, "# tool={TOOL} version={VERSION} command={command}");
    let _ = writeln!(
        s,
        "# instance={} axis={} tol={} norm_cap={} seed={seed}",
        t.instance,
        t.axis.as_str(),
        fmt_num(t.tol),
        fmt_num(t.norm_cap),
    );
    let _ = writeln!(
        s,
        "# config={}",
        serde_json::to_string(config).expect("values serialize")
    );
    for p in &t.points {
        if let Some(e) = &p.error {
            let _ = writeln!(s, "# error param={} {}", fmt_num(p.param), e.replace('\n', " "));
        }
    }
    s.push_str("param,lower,upper,cap_hit,attained\n");
    for p in &t.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_num(p.param),
            fmt_num(p.lower),
            fmt_num(p.upper),
            p.cap_hit,
            p.attained
        );
    }
    s
}
