//! Command-line drivers. Every command prints JSON on stdout; input errors
//! go to stderr with exit code 2.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::logfun::{continue_along, expand_region, BranchTriple, RegionId};
use crate::models::oracle_continue;
use crate::report::CheckReport;
use crate::transforms::{a_family, omega_family};
use crate::verify::{run_suite, Scenario, SuiteConfig};
use crate::{scaled_defect, Sign};

pub mod scenario;

pub use scenario::{parse_scenario, to_json, ScenarioError, ScenarioFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "twistlab", version, about = "Branch calculus for multivalued two-point logarithmic functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every label on one branch.
    Eval(EvalArgs),
    /// Compare a region series with direct evaluation.
    Expand(ExpandArgs),
    /// Continue along a named path and compare with the oracle.
    Continue(ContinueArgs),
    /// Apply a transform and print the resulting scenario.
    Transform(TransformArgs),
    /// Run the scenario's checks; one JSON report per line.
    Verify(VerifyArgs),
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected RE,IM, got {s:?}")),
    }
}

#[derive(Debug, Clone, Args)]
pub struct Point {
    #[arg(long, value_name = "RE,IM", value_parser = parse_complex, allow_hyphen_values = true)]
    pub z1: Complex64,
    #[arg(long, value_name = "RE,IM", value_parser = parse_complex, allow_hyphen_values = true)]
    pub z2: Complex64,
}

#[derive(Debug, Clone, Args)]
pub struct Branch {
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub p1: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub p2: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub p12: i64,
}

impl Branch {
    fn triple(&self) -> BranchTriple {
        BranchTriple::new(self.p1, self.p2, self.p12)
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// JSON output; always on, accepted for compatibility.
    #[arg(long, default_value_t = true)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub branch: Branch,
    #[command(flatten)]
    pub point: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionArg {
    Product,
    Reversed,
    Iterate,
}

impl From<RegionArg> for RegionId {
    fn from(r: RegionArg) -> Self {
        match r {
            RegionArg::Product => RegionId::Product,
            RegionArg::Reversed => RegionId::Reversed,
            RegionArg::Iterate => RegionId::Iterate,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub branch: Branch,
    #[command(flatten)]
    pub point: Point,
    #[arg(long, value_enum)]
    pub region: RegionArg,
    #[arg(long, default_value_t = crate::tol::EXPANSION_ORDER)]
    pub order: usize,
    #[arg(long, default_value_t = crate::tol::EXPANSION)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ContinueArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub branch: Branch,
    /// Name of a path in the scenario file.
    #[arg(long)]
    pub path: String,
    /// Initial oracle steps per move.
    #[arg(long, default_value_t = crate::models::ORACLE_MIN_STEPS)]
    pub steps: usize,
    #[arg(long, default_value_t = crate::tol::CONTINUATION)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformOp {
    #[value(name = "omega+")]
    OmegaPlus,
    #[value(name = "omega-")]
    OmegaMinus,
    #[value(name = "a+")]
    APlus,
    #[value(name = "a-")]
    AMinus,
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub op: TransformOp,
    /// Write the scenario here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Scenario files; repeat to run a set.
    #[arg(long, value_name = "FILE", required = true)]
    pub scenario: Vec<PathBuf>,
    /// Check name or kind from the scenario files, or `all`.
    #[arg(long, default_value = "all")]
    pub check: String,
    /// Seed for checks that do not fix one.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Replaces each check's tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub sign: Option<SignArg>,
    /// Default expansion order.
    #[arg(long, default_value_t = crate::tol::EXPANSION_ORDER)]
    pub order: usize,
    /// Default samples per check part.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value_t = true)]
    pub json: bool,
}

/// Failure to read or interpret input.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

pub fn load_scenario(path: &std::path::Path) -> Result<Scenario, InputError> {
    let bytes = std::fs::read(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    parse_scenario(&bytes).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn c(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn cmd_eval(a: &EvalArgs) -> Result<(Value, bool), InputError> {
    let sc = load_scenario(&a.common.scenario)?;
    let bt = a.branch.triple();
    let mut values = Vec::new();
    for (label, f) in sc.labels.iter().zip(&sc.family.f) {
        let v = f.eval_branch2(bt, a.point.z1, a.point.z2)?;
        values.push(json!({"label": label, "value": c(v)}));
    }
    Ok((
        json!({
            "command": "eval",
            "scenario": sc.name,
            "bt": bt.as_array(),
            "z1": c(a.point.z1),
            "z2": c(a.point.z2),
            "values": values,
        }),
        true,
    ))
}

fn cmd_expand(a: &ExpandArgs) -> Result<(Value, bool), InputError> {
    let sc = load_scenario(&a.common.scenario)?;
    let bt = a.branch.triple();
    let region = RegionId::from(a.region);
    let (z1, z2) = (a.point.z1, a.point.z2);
    let target = region.designated(bt);
    let in_window = region.in_window(z1, z2, 0.0)?;
    let mut values = Vec::new();
    let mut worst = 0.0f64;
    for (label, f) in sc.labels.iter().zip(&sc.family.f) {
        let series = expand_region(f, region, bt, a.order);
        let s = series.evaluate(z1, z2)?;
        let d = f.eval_branch2(target, z1, z2)?;
        let defect = scaled_defect(s, d);
        worst = worst.max(defect);
        values.push(json!({
            "label": label,
            "series": c(s),
            "direct": c(d),
            "terms": series.term_count(),
            "defect": finite(defect),
        }));
    }
    let pass = in_window && worst < a.tol;
    Ok((
        json!({
            "command": "expand",
            "scenario": sc.name,
            "region": region.name(),
            "bt": bt.as_array(),
            "designated": target.as_array(),
            "order": a.order,
            "z1": c(z1),
            "z2": c(z2),
            "inWindow": in_window,
            "values": values,
            "maxDefect": finite(worst),
            "tol": a.tol,
            "pass": pass,
        }),
        pass,
    ))
}

fn cmd_continue(a: &ContinueArgs) -> Result<(Value, bool), InputError> {
    let sc = load_scenario(&a.common.scenario)?;
    let bt = a.branch.triple();
    let path = sc
        .paths
        .get(&a.path)
        .ok_or_else(|| InputError(format!("unknown path {:?}", a.path)))?;
    let mut values = Vec::new();
    let mut worst = 0.0f64;
    for (label, f) in sc.labels.iter().zip(&sc.family.f) {
        let tracked = continue_along(f, bt, path)?;
        let oracle = oracle_continue(f, bt, path, a.steps)?;
        let defect = scaled_defect(tracked.value, oracle.value);
        worst = worst.max(defect);
        values.push(json!({
            "label": label,
            "end": tracked.end.as_array(),
            "value": c(tracked.value),
            "oracle": c(oracle.value),
            "oracleSteps": oracle.steps,
            "certificate": finite(tracked.certificate),
            "crossings": tracked.crossings,
            "defect": finite(defect),
        }));
    }
    let end = path.end();
    let pass = worst < a.tol;
    Ok((
        json!({
            "command": "continue",
            "scenario": sc.name,
            "path": a.path,
            "bt": bt.as_array(),
            "start": {"z1": c(path.start.z1), "z2": c(path.start.z2)},
            "end": {"z1": c(end.z1), "z2": c(end.z2)},
            "values": values,
            "maxDefect": finite(worst),
            "tol": a.tol,
            "pass": pass,
        }),
        pass,
    ))
}

/// The scenario produced by a transform.
pub fn transform_scenario(sc: &Scenario, op: TransformOp) -> Result<Scenario, InputError> {
    let family = match op {
        TransformOp::OmegaPlus => omega_family(&sc.family, Sign::Plus)?,
        TransformOp::OmegaMinus => omega_family(&sc.family, Sign::Minus)?,
        TransformOp::APlus => a_family(&sc.family, sc.qp, Sign::Plus)?,
        TransformOp::AMinus => a_family(&sc.family, sc.qp, Sign::Minus)?,
    };
    Ok(Scenario {
        family,
        ..sc.clone()
    })
}

fn cmd_transform(a: &TransformArgs, out: &mut dyn Write) -> Result<bool, InputError> {
    let sc = load_scenario(&a.common.scenario)?;
    let next = transform_scenario(&sc, a.op)?;
    let text = to_json(&next);
    match &a.out {
        Some(p) => {
            std::fs::write(p, &text).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
            writeln!(out, "{}", json!({"command": "transform", "scenario": sc.name, "written": p.display().to_string()}))?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    Ok(true)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<bool, InputError> {
    let mut scenarios = Vec::with_capacity(a.scenario.len());
    for p in &a.scenario {
        scenarios.push(load_scenario(p)?);
    }
    if a.check != "all" {
        for sc in &mut scenarios {
            sc.checks.retain(|c| c.label() == a.check || c.kind.name() == a.check);
        }
        if scenarios.iter().all(|s| s.checks.is_empty()) {
            return Err(InputError(format!("no check named {:?}", a.check)));
        }
    }
    let mut cfg = SuiteConfig {
        samples: a.samples,
        order: a.order,
        seed: a.seed,
        tol: a.tol,
        sign: a.sign.map(Sign::from),
        ..SuiteConfig::default()
    };
    if a.threads > 0 {
        cfg.threads = a.threads;
    }
    let reports = run_suite(&scenarios, &cfg);
    for r in &reports {
        writeln!(out, "{}", serde_json::to_string(r)?)?;
    }
    Ok(reports.iter().all(CheckReport::as_expected))
}

fn emit(out: &mut dyn Write, v: &impl Serialize) -> Result<(), InputError> {
    writeln!(out, "{}", serde_json::to_string(v)?)?;
    Ok(())
}

/// Runs one command and returns the exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Eval(a) => cmd_eval(a).and_then(|(v, ok)| emit(out, &v).map(|_| ok)),
        Command::Expand(a) => cmd_expand(a).and_then(|(v, ok)| emit(out, &v).map(|_| ok)),
        Command::Continue(a) => cmd_continue(a).and_then(|(v, ok)| emit(out, &v).map(|_| ok)),
        Command::Transform(a) => cmd_transform(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "twistlab: {msg}");
            EXIT_INPUT
        }
    }
}

/// Parses `args` and runs; clap's own errors exit with code 2.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
            } else {
                let _ = out.write_all(text.as_bytes());
            }
            code
        }
    }
}
