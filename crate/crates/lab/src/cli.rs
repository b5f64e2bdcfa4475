//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed checks or other runtime failure, 2 invalid
//! configuration, 3 bracket error, 4 evaluation budget exhausted.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use levelset_core::{
    expand_bracket_left, find_leftmost_root, gap_report, regularize, sweep_p, sweep_v,
    GapConfig, GapError, InnerConfig, RootConfig, RootError, RootMethod,
};

use crate::exec::Threads;
use crate::fixtures;
use crate::instances::{self, Instance, Params};
use crate::output::{self, fmt_num, num, opt_num};
use crate::reproduce;

pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BRACKET: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "levelset-lab", version, about = "Level-set root finding and duality-gap experiments")]
pub struct Cli {
    /// Worker threads for sweeps and probes [default: available cores]
    #[arg(long, global = true, env = "LEVELSET_LAB_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find the leftmost root of v(tau) <= epsilon and write the trace
    Solve(SolveArgs),
    /// Estimate the dual value, compare with the primal value and classify the gap
    Diagnose(DiagnoseArgs),
    /// Evaluate v(tau) or p(u) on a grid
    Sweep(SweepArgs),
    /// Run the canonical pipeline of an example and print pass/fail checks
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(reproduce::EXAMPLES))]
        example: String,
    },
    /// Recompute the bundled fixture file with the direct solver
    Fixture {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// example1, example2, example3, univariate, bpdn or phaselift
    #[arg(long)]
    instance: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    noise_u: Option<f64>,
    /// Fixture file to use instead of the bundled one
    #[arg(long)]
    fixture: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Method {
    Bisection,
    Secant,
    Newton,
}

impl From<Method> for RootMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Bisection => RootMethod::Bisection,
            Method::Secant => RootMethod::Secant,
            Method::Newton => RootMethod::Newton,
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Target infeasibility; the root of v(tau) <= epsilon is located
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "bisection")]
    method: Method,
    /// Left end of the bracket; without it the bracket is expanded leftward from --hi
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    /// Right end of the bracket [default: instance hint, else tau_p + 1]
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    resolution: f64,
    /// Norm cap R of the inner evaluations
    #[arg(long, default_value_t = 1e3)]
    cap: f64,
    #[arg(long, default_value_t = 200)]
    max_evals: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// [default: 1e-6, or 1e-14 with --regularize]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Add mu ||x|| to the objective before the analysis
    #[arg(long)]
    regularize: Option<f64>,
    #[arg(long, value_enum, default_value = "bisection")]
    method: Method,
    #[arg(long, default_value_t = 1e-6)]
    resolution: f64,
    #[arg(long, default_value_t = 1e3)]
    cap: f64,
    /// Norm caps of the divergence probe, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [1e2, 1e3, 1e4])]
    probe_caps: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    max_evals: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Axis {
    V,
    P,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "v")]
    axis: Axis,
    /// START:STOP:COUNT or a comma-separated list of values
    #[arg(long, allow_hyphen_values = true)]
    grid: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1e3)]
    cap: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// A failed command with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn config(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_FAILED,
        message: message.into(),
    }
}

fn positive(flag: &str, x: f64) -> Result<(), Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(config(format!("{flag} must be positive and finite, got {x}")))
    }
}

fn finite(flag: &str, x: f64) -> Result<(), Failure> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(config(format!("{flag} must be finite, got {x}")))
    }
}

fn workers(cli_value: Option<usize>) -> Result<Threads, Failure> {
    match cli_value {
        Some(0) => Err(config("--workers must be at least 1")),
        Some(n) => Ok(Threads::new(n)),
        None => Ok(Threads::available()),
    }
}

fn build(a: &InstanceArgs) -> Result<Instance, Failure> {
    if let Some(u) = a.noise_u {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(config(format!("--noise-u must be finite and nonnegative, got {u}")));
        }
    }
    let params = Params {
        seed: a.seed,
        m: a.m,
        n: a.n,
        k: a.k,
        noise_u: a.noise_u,
    };
    instances::build(&a.instance, &params, a.fixture.as_deref()).map_err(config)
}

fn instance_echo(a: &InstanceArgs) -> Value {
    json!({
        "instance": a.instance,
        "seed": a.seed,
        "m": a.m,
        "n": a.n,
        "k": a.k,
        "noise_u": opt_num(a.noise_u),
        "fixture": a.fixture.as_ref().map(|p| p.display().to_string()),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| runtime(format!("--output {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| runtime(format!("stdout: {e}"))),
    }
}

fn root_error_code(e: &RootError) -> u8 {
    match e {
        RootError::Bracket { .. } => EXIT_BRACKET,
        RootError::Budget { .. } => EXIT_BUDGET,
        RootError::Eval(_) => EXIT_FAILED,
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<(), Failure> {
    positive("--epsilon", a.epsilon)?;
    positive("--resolution", a.resolution)?;
    positive("--cap", a.cap)?;
    if let Some(lo) = a.lo {
        finite("--lo", lo)?;
    }
    if let Some(hi) = a.hi {
        finite("--hi", hi)?;
    }
    if let (Some(lo), Some(hi)) = (a.lo, a.hi) {
        if lo >= hi {
            return Err(config(format!("--lo must be below --hi, got {lo} >= {hi}")));
        }
    }
    if a.max_evals == 0 {
        return Err(config("--max-evals must be at least 1"));
    }
    let inst = build(&a.instance)?;
    let vf = inst.value_function();
    let hi = match a.hi.or(vf.bracket_hint().map(|b| b.1)).or(vf.tau_p_ref().map(|t| t + 1.0)) {
        Some(h) => h,
        None => return Err(config("--hi is required for an instance without a bracket hint")),
    };
    if let Some(lo) = a.lo {
        if lo >= hi {
            return Err(config(format!("--lo must be below the right end {hi}")));
        }
    }
    let cfg = RootConfig {
        resolution: a.resolution,
        max_evals: a.max_evals,
        inner: InnerConfig {
            norm_cap: a.cap,
            ..InnerConfig::default()
        },
        ..RootConfig::default()
    };
    let echo = merge(
        instance_echo(&a.instance),
        json!({
            "epsilon": num(a.epsilon),
            "method": output::method_name(a.method.into()),
            "lo": opt_num(a.lo),
            "hi": num(hi),
            "resolution": num(a.resolution),
            "cap": num(a.cap),
            "max_evals": a.max_evals,
        }),
    );
    let write = |result: Value| {
        let doc = output::document("solve", echo.clone(), inst.seed(), result);
        emit(a.output.as_ref(), &output::to_text(&doc))
    };

    let (bracket, expansion) = match a.lo {
        Some(lo) => ((lo, hi), Vec::new()),
        None => match expand_bracket_left(vf, a.epsilon, hi, &cfg) {
            Ok(x) => match x.bracket {
                Some(b) => (b, x.probes),
                None => {
                    let msg = format!(
                        "gap may be infinite: v stays within epsilon down to tau = {}",
                        fmt_num(hi - cfg.width_cap)
                    );
                    write(json!({
                        "status": "bracket_error",
                        "diagnostic": msg,
                        "expansion": x.probes.iter().map(output::step_json).collect::<Vec<_>>(),
                    }))?;
                    return Err(Failure {
                        code: EXIT_BRACKET,
                        message: msg,
                    });
                }
            },
            Err(e) => {
                let code = root_error_code(&e);
                if let Some(t) = e.trace() {
                    write(json!({"status": "error", "diagnostic": e.to_string(), "trace": output::trace_json(t)}))?;
                }
                return Err(Failure {
                    code,
                    message: e.to_string(),
                });
            }
        },
    };
    let expansion_json: Vec<Value> = expansion.iter().map(output::step_json).collect();
    match find_leftmost_root(vf, a.epsilon, bracket, a.method.into(), &cfg) {
        Ok(t) => {
            eprintln!(
                "final_tau={} evaluations={} bracket=[{}, {}]",
                fmt_num(t.final_tau),
                t.evaluations,
                fmt_num(t.final_bracket.0),
                fmt_num(t.final_bracket.1)
            );
            write(json!({
                "status": "ok",
                "expansion": expansion_json,
                "trace": output::trace_json(&t),
            }))
        }
        Err(e) => {
            let code = root_error_code(&e);
            let status = match code {
                EXIT_BRACKET => "bracket_error",
                EXIT_BUDGET => "budget_error",
                _ => "error",
            };
            let mut diagnostic = e.to_string();
            if matches!(e, RootError::Bracket { .. }) && diagnostic.contains("left of bracket") {
                diagnostic.push_str("; gap may be infinite or the bracket too narrow");
            }
            write(json!({
                "status": status,
                "diagnostic": diagnostic,
                "expansion": expansion_json,
                "trace": e.trace().map_or(Value::Null, output::trace_json),
            }))?;
            Err(Failure {
                code,
                message: diagnostic,
            })
        }
    }
}

fn cmd_diagnose(a: &DiagnoseArgs, exec: &Threads) -> Result<(), Failure> {
    let epsilon = a
        .epsilon
        .unwrap_or(if a.regularize.is_some() { 1e-14 } else { 1e-6 });
    positive("--epsilon", epsilon)?;
    positive("--resolution", a.resolution)?;
    positive("--cap", a.cap)?;
    if let Some(mu) = a.regularize {
        positive("--regularize", mu)?;
    }
    if a.probe_caps.is_empty() || a.probe_caps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config("--probe-caps must be a nonempty increasing list"));
    }
    for c in &a.probe_caps {
        positive("--probe-caps", *c)?;
    }
    let inst = build(&a.instance)?;
    let inst = match a.regularize {
        None => inst,
        Some(mu) => match inst.plain() {
            Some(p) => Instance::Plain(regularize(p, mu).map_err(|e| config(format!("--regularize: {e}")))?),
            None => return Err(config("--regularize applies to plain instances, not example3")),
        },
    };
    let cfg = GapConfig {
        epsilon,
        method: a.method.into(),
        root: RootConfig {
            resolution: a.resolution,
            max_evals: a.max_evals,
            inner: InnerConfig {
                norm_cap: a.cap,
                ..InnerConfig::default()
            },
            ..RootConfig::default()
        },
        probe_caps: a.probe_caps.clone(),
        ..GapConfig::default()
    };
    let echo = merge(
        instance_echo(&a.instance),
        json!({
            "epsilon": num(epsilon),
            "regularize": opt_num(a.regularize),
            "method": output::method_name(cfg.method),
            "resolution": num(a.resolution),
            "cap": num(a.cap),
            "probe_caps": a.probe_caps.iter().map(|c| num(*c)).collect::<Vec<_>>(),
            "max_evals": a.max_evals,
        }),
    );
    let write = |result: Value| {
        let doc = output::document("diagnose", echo.clone(), inst.seed(), result);
        emit(a.output.as_ref(), &output::to_text(&doc))
    };
    match gap_report(inst.value_function(), &cfg, exec) {
        Ok(r) => {
            eprintln!(
                "tau_d={} tau_p={} gap={} classification={}",
                fmt_num(r.tau_d_est),
                fmt_num(r.tau_p),
                fmt_num(r.gap),
                r.classification.as_str()
            );
            write(json!({"status": "ok", "report": output::report_json(&r)}))
        }
        Err(GapError::Root { error, partial }) => {
            let code = root_error_code(&error);
            write(json!({
                "status": "error",
                "diagnostic": error.to_string(),
                "report": output::report_json(&partial),
                "trace": error.trace().map_or(Value::Null, output::trace_json),
            }))?;
            Err(Failure {
                code,
                message: error.to_string(),
            })
        }
        Err(e) => Err(runtime(e.to_string())),
    }
}

/// `START:STOP:COUNT` or a comma-separated list.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |what: &str| config(format!("--grid: {what} in `{spec}`"));
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad("expected START:STOP:COUNT"));
        };
        let start: f64 = start.trim().parse().map_err(|_| bad("bad START"))?;
        let stop: f64 = stop.trim().parse().map_err(|_| bad("bad STOP"))?;
        let count: usize = count.trim().parse().map_err(|_| bad("bad COUNT"))?;
        if count == 0 {
            return Err(bad("COUNT must be positive"));
        }
        levelset_core::linspace(start, stop, count)
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("bad number")))
            .collect::<Result<Vec<_>, _>>()?
    };
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(grid)
}

fn cmd_sweep(a: &SweepArgs, exec: &Threads) -> Result<(), Failure> {
    positive("--tol", a.tol)?;
    positive("--cap", a.cap)?;
    let grid = parse_grid(&a.grid)?;
    let inst = build(&a.instance)?;
    let cfg = InnerConfig::with(a.tol, a.cap);
    let table = match a.axis {
        Axis::V => sweep_v(inst.value_function(), inst.seed(), &grid, &cfg, exec),
        Axis::P => match inst.plain() {
            Some(p) => sweep_p(p, &grid, &cfg, exec),
            None => return Err(config("--axis p applies to plain instances, not example3")),
        },
    }
    .map_err(|e| config(format!("--grid: {e}")))?;
    let echo = merge(
        instance_echo(&a.instance),
        json!({
            "axis": table.axis.as_str(),
            "grid": a.grid,
            "tol": num(a.tol),
            "cap": num(a.cap),
            "format": match a.format { Format::Csv => "csv", Format::Json => "json" },
        }),
    );
    let text = match a.format {
        Format::Csv => output::sweep_csv("sweep", &echo, &table),
        Format::Json => output::to_text(&output::document(
            "sweep",
            echo,
            table.seed,
            output::sweep_json(&table),
        )),
    };
    emit(a.output.as_ref(), &text)
}

fn cmd_reproduce(example: &str, exec: &Threads) -> Result<(), Failure> {
    let checks = reproduce::run(example, exec).ok_or_else(|| config(format!("unknown example `{example}`")))?;
    for c in &checks {
        println!("{c}");
    }
    if checks.iter().all(|c| c.pass) {
        Ok(())
    } else {
        Err(runtime(format!("{example}: some checks failed")))
    }
}

fn cmd_fixture(out: Option<&PathBuf>) -> Result<(), Failure> {
    let list = fixtures::generate().map_err(|e| runtime(e.to_string()))?;
    let text = serde_json::to_string_pretty(&fixtures::to_json(&list)).expect("values serialize") + "\n";
    emit(out, &text)
}

/// Parses `args` and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let result = workers(cli.workers).and_then(|exec| match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Diagnose(a) => cmd_diagnose(a, &exec),
        Command::Sweep(a) => cmd_sweep(a, &exec),
        Command::Reproduce { example } => cmd_reproduce(example, &exec),
        Command::Fixture { output } => cmd_fixture(output.as_ref()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
