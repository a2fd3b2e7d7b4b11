//! `qkz`: R-matrices, qKZ and dynamical operators, verification runs and
//! flow demonstrations from the command line.
//!
//! Exit codes: 0 success, 1 verification failure or rejected flow path,
//! 2 usage or configuration error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{json, Value};

use qkz_core::exact::{parse_rat, rat_to_f64, Rat};
use qkz_core::flow::{commuting_square_defect, FlowError, FlowState, TrajectoryLog};
use qkz_core::harness::{default_matrix, parse_config, run_matrix};
use qkz_core::modules::{build_shared, ModuleDescriptor};
use qkz_core::operators::{EvalPoint, LMutation, LTerm, OperatorError, Operators};
use qkz_core::rmatrix::{RMatrixCache, RMatrixError};

#[derive(Parser)]
#[command(name = "qkz", version, about = "Exact gl_N R-matrices, qKZ and dynamical operators, and identity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the rational R-matrix of V1 ⊗ V2 and write it as JSON.
    Rmatrix(RmatrixArgs),
    /// Build K_i, L_a or ∂L_a/∂λ_c at an exact point and write it as JSON.
    Operators(OperatorsArgs),
    /// Run verification suites from a JSON config and write a report.
    Verify(VerifyArgs),
    /// Transport a vector around a shift/flow square and report the defect.
    Flow(FlowArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Compact single-line JSON.
    Json,
    /// Indented JSON.
    Pretty,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RmatrixArgs {
    /// Rank N of gl_N.
    #[arg(long)]
    n: usize,
    /// First factor: vector, sym:K or verma:L1,..,LN:DEPTH.
    #[arg(long)]
    v1: String,
    /// Second factor, same syntax as --v1.
    #[arg(long)]
    v2: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorKind {
    /// qKZ operator K_i.
    K,
    /// Dynamical operator L_a.
    L,
    /// Closed-form derivative ∂L_a/∂λ_c.
    Dl,
}

#[derive(Args)]
struct PointArgs {
    /// Rank N of gl_N.
    #[arg(long)]
    n: usize,
    /// Tensor factor, repeated once per factor in order.
    #[arg(long = "factor", required = true)]
    factors: Vec<String>,
    /// Evaluation points z_1,..,z_n (rationals such as 1/3 or decimals).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    z: Option<Vec<String>>,
    /// Dynamical parameters λ_1,..,λ_N.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    lambda: Option<Vec<String>>,
    /// Step p of the difference equations.
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
}

#[derive(Args)]
struct OperatorsArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Which operator to build.
    #[arg(long, value_enum)]
    kind: OperatorKind,
    /// 1-based index: i for K_i, a for L_a and ∂L_a/∂λ_c.
    #[arg(long)]
    index: usize,
    /// 1-based c for ∂L_a/∂λ_c.
    #[arg(long)]
    wrt: Option<usize>,
    /// Flip the sign of one term of L_index: quadratic, shift, exchange or dynamical.
    #[arg(long)]
    mutate: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON config: one suite configuration or an array of them. The
    /// default matrix of module families is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed overriding the seeds in the config.
    #[arg(long, env = "QKZ_SEED")]
    seed: Option<u64>,
    /// Report elapsed_ms as 0 so that reports are byte-identical across runs.
    #[arg(long)]
    no_timing: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    point: PointArgs,
    /// 1-based factor i of the shift z_i → z_i + p.
    #[arg(long, default_value_t = 1)]
    i: usize,
    /// 1-based index a of the flow in λ_a.
    #[arg(long, default_value_t = 1)]
    a: usize,
    /// End point of the λ_a segment; λ_a + 0.7 when omitted.
    #[arg(long, allow_hyphen_values = true)]
    lambda_target: Option<f64>,
    /// Local error tolerance of the integrator.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Largest defect accepted as a pass.
    #[arg(long, default_value_t = 1e-6)]
    max_defect: f64,
    /// Initial vector; 1/(k+1) on the safe basis vectors when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u: Option<Vec<f64>>,
    /// Trajectory log (JSON lines); not written when omitted.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o error: {e}"))
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure::Usage(msg.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rmatrix(a) => cmd_rmatrix(a),
        Command::Operators(a) => cmd_operators(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Flow(a) => cmd_flow(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `qkz help` for usage");
            ExitCode::from(2)
        }
    }
}

fn write_output(out: &OutputArgs, value: &Value) -> Result<(), Failure> {
    let mut text = match out.format {
        Format::Json => serde_json::to_string(value),
        Format::Pretty => serde_json::to_string_pretty(value),
    }
    .expect("JSON values serialize");
    text.push('\n');
    match &out.out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn descriptor(n: usize, s: &str) -> Result<ModuleDescriptor, Failure> {
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    ModuleDescriptor::parse(n, s).map_err(usage)
}

fn cmd_rmatrix(args: RmatrixArgs) -> Result<bool, Failure> {
    let d1 = descriptor(args.n, &args.v1)?;
    let d2 = descriptor(args.n, &args.v2)?;
    let v1 = build_shared(&d1).map_err(usage)?;
    let v2 = build_shared(&d2).map_err(usage)?;
    let r = match RMatrixCache::new().get(&v1, &v2) {
        Ok(r) => r,
        Err(e @ RMatrixError::NonGenericModule { .. }) => return Err(Failure::Check(e.to_string())),
        Err(e) => return Err(usage(e)),
    };
    write_output(&args.output, &r.to_json())?;
    let poles: Vec<String> = r.poles().iter().map(|x| x.to_string()).collect();
    eprintln!("R({d1}, {d2}): {} blocks, dim {}", r.blocks().len(), r.dim());
    eprintln!("poles: [{}]", poles.join(", "));
    let irr = r.irrational_pole_factors();
    if !irr.is_empty() {
        eprintln!("irreducible pole factors: {}", irr.join(", "));
    }
    Ok(true)
}

fn rat_list(name: &str, items: &[String]) -> Result<Vec<Rat>, Failure> {
    items
        .iter()
        .map(|s| parse_rat(s).ok_or_else(|| usage(format!("--{name}: cannot parse `{s}` as a rational"))))
        .collect()
}

/// The exact point from the flags, with defaults `z_i = 1/10 + 6i/5`,
/// `λ_c = 17/10 - 11c/10`, `p = 9/10`.
fn exact_point(args: &PointArgs, n: usize, rank: usize) -> Result<EvalPoint, Failure> {
    let z = match &args.z {
        Some(v) => rat_list("z", v)?,
        None => (0..n)
            .map(|i| qkz_core::exact::rat(1 + 12 * i as i64, 10))
            .collect(),
    };
    let lambda = match &args.lambda {
        Some(v) => rat_list("lambda", v)?,
        None => (0..rank)
            .map(|c| qkz_core::exact::rat(17 - 11 * c as i64, 10))
            .collect(),
    };
    let p = match &args.p {
        Some(s) => parse_rat(s).ok_or_else(|| usage(format!("--p: cannot parse `{s}` as a rational")))?,
        None => qkz_core::exact::rat(9, 10),
    };
    let pt = EvalPoint::new(z, lambda, p);
    pt.validate(n, rank).map_err(usage)?;
    Ok(pt)
}

fn build_ops(args: &PointArgs) -> Result<Operators, Failure> {
    let descs = args
        .factors
        .iter()
        .map(|f| descriptor(args.n, f))
        .collect::<Result<Vec<_>, _>>()?;
    Operators::from_descriptors(&descs, &RMatrixCache::new()).map_err(|e| match e {
        OperatorError::RMatrix(r @ RMatrixError::NonGenericModule { .. }) => Failure::Check(r.to_string()),
        e => usage(e),
    })
}

fn one_based(name: &str, i: usize, bound: usize) -> Result<usize, Failure> {
    if i == 0 || i > bound {
        return Err(usage(format!("--{name} {i} out of range 1..={bound}")));
    }
    Ok(i - 1)
}

fn parse_term(s: &str) -> Result<LTerm, Failure> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| usage(format!("--mutate: unknown term `{s}` (quadratic, shift, exchange, dynamical)")))
}

fn cmd_operators(args: OperatorsArgs) -> Result<bool, Failure> {
    let mut ops = build_ops(&args.point)?;
    let (n, rank) = (ops.n_factors(), ops.rank());
    let pt = exact_point(&args.point, n, rank)?;
    let bound = if matches!(args.kind, OperatorKind::K) { n } else { rank };
    let index = one_based("index", args.index, bound)?;
    if let Some(t) = &args.mutate {
        ops = ops.with_mutation(Some(LMutation {
            term: parse_term(t)?,
            index,
        }));
    }
    let built = match args.kind {
        OperatorKind::K => ops.build_k(index, &pt),
        OperatorKind::L => ops.build_l(index, &pt),
        OperatorKind::Dl => {
            let c = args.wrt.ok_or_else(|| usage("--kind dl requires --wrt"))?;
            ops.build_l_lambda_derivative(one_based("wrt", c, rank)?, index, &pt)
        }
    };
    let m = built.map_err(usage)?;
    write_output(&args.output, &m.to_json())?;
    eprintln!("{} on {}-dimensional space", m.formula, ops.dim());
    Ok(true)
}

fn cmd_verify(args: VerifyArgs) -> Result<bool, Failure> {
    let mut cfgs = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            parse_config(&text).map_err(usage)?
        }
        None => default_matrix(0),
    };
    if let Some(seed) = args.seed {
        for c in &mut cfgs {
            c.seed = seed;
        }
    }
    let report = run_matrix(&cfgs, !args.no_timing).map_err(|e| Failure::Check(e.to_string()))?;
    write_output(&args.output, &report.to_json())?;
    eprint!("{}", report.summary());
    Ok(report.pass)
}

fn cmd_flow(args: FlowArgs) -> Result<bool, Failure> {
    let ops = build_ops(&args.point)?;
    let (n, rank) = (ops.n_factors(), ops.rank());
    let pt = exact_point(&args.point, n, rank)?;
    let i = one_based("i", args.i, n)?;
    let a = one_based("a", args.a, rank)?;
    if !(args.tol.is_finite() && args.tol > 0.0 && args.max_defect > 0.0) {
        return Err(usage("--tol and --max-defect must be positive"));
    }
    let dim = ops.dim();
    let mask = ops.tensor().safe_indices(2);
    let u = match &args.u {
        Some(u) if u.len() != dim => return Err(usage(format!("--u has {} entries, expected {dim}", u.len()))),
        Some(u) => u.clone(),
        None => (0..dim)
            .map(|k| {
                if mask.as_ref().is_none_or(|m| m.contains(&k)) {
                    1.0 / (k as f64 + 1.0)
                } else {
                    0.0
                }
            })
            .collect(),
    };
    let state = FlowState {
        u: DVector::from_vec(u),
        z: pt.z.iter().map(rat_to_f64).collect(),
        lambda: pt.lambda.iter().map(rat_to_f64).collect(),
        p: rat_to_f64(&pt.p),
    };
    let target = args.lambda_target.unwrap_or(state.lambda[a] + 0.7);
    let mut log = TrajectoryLog::default();
    let defect = match commuting_square_defect(&ops, i, a, target, &state, args.tol, Some(&mut log)) {
        Ok(d) => d,
        Err(e @ FlowError::PoleCrossing { .. }) => return Err(Failure::Check(e.to_string())),
        Err(FlowError::Operator(e)) => return Err(usage(format!("point is not generic: {e}"))),
        Err(e) => return Err(Failure::Check(e.to_string())),
    };
    if let Some(path) = &args.log {
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf)?;
        fs::write(path, buf)?;
    }
    let pass = defect < args.max_defect;
    let descs: Vec<String> = ops.tensor().descriptors().iter().map(ToString::to_string).collect();
    let out = json!({
        "modules": descs,
        "rank": rank,
        "i": i + 1,
        "a": a + 1,
        "z": state.z,
        "lambda": state.lambda,
        "p": state.p,
        "lambda_target": target,
        "tol": args.tol,
        "max_defect": args.max_defect,
        "defect": defect,
        "steps": log.records.len(),
        "pass": pass,
    });
    write_output(&args.output, &out)?;
    eprintln!("defect {defect:.3e} ({})", if pass { "pass" } else { "FAIL" });
    Ok(pass)
}
