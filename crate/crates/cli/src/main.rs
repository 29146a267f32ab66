//! `ipk`: exact kernels, verification suites, insertion correspondences,
//! and simulations for the four interacting particle systems.
//!
//! Exit codes: 0 success, 1 failed verification checks, 2 malformed
//! flags or unknown suite, 3 chamber or support violation, 4 uncertified
//! window.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use ipk_core::exactnum::{format_rational, parse_rational, rat_pow};
use ipk_core::intertwine::q_core_via_conjugation;
use ipk_core::rsk::{correspond, edge_vector, Variant};
use ipk_core::symfun::WeightVector;
use ipk_core::systems::{
    mc_estimate, n_step_kernel, n_step_kernel_certified, sample_path, theorem_kernel,
    CaseId, InnovationGrid, OrderedState,
};
use ipk_core::verify::run_suite;
use ipk_core::{Error, Rational, Result};
use num_traits::{One, Signed, Zero};

#[derive(Parser)]
#[command(name = "ipk", version, about = "interacting particle kernels, exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a transition kernel entry Q_n(from, to).
    Kernel(KernelArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Run an insertion correspondence on an innovation grid.
    Rsk(RskArgs),
    /// Sample a trajectory of a particle system.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long)]
    case: String,
    /// number of time steps
    #[arg(long)]
    n: usize,
    /// comma-separated jump probabilities, rationals like 1/2
    #[arg(long)]
    p: String,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    /// theorem | power | conjugation | mc
    #[arg(long)]
    method: String,
    /// displacement cap per innovation (power) or summation cap (conjugation)
    #[arg(long)]
    window: Option<u64>,
    /// certified tail tolerance, rational
    #[arg(long, default_value = "1/1000000000000")]
    tol: String,
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[arg(long = "N")]
    n_particles: usize,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long)]
    p: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1/1000000000000")]
    tol: String,
}

#[derive(Args)]
struct RskArgs {
    /// rsk | dual-rsk | burge | dual-burge
    #[arg(long)]
    variant: String,
    /// CSV innovation grid: N rows of n nonnegative integers
    #[arg(long)]
    xi: std::path::PathBuf,
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    case: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: String,
    #[arg(long)]
    seed: u64,
    /// initial state, comma-separated; defaults to the origin
    #[arg(long)]
    y0: Option<String>,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ChamberViolation(_) | Error::SupportMismatch(_) => 3,
        Error::UncertifiedWindow(_) => 4,
        _ => 2,
    }
}

fn parse_weights(s: &str) -> Result<WeightVector> {
    let entries: Result<Vec<Rational>> = s.split(',').map(parse_rational).collect();
    WeightVector::new(entries?)
}

fn parse_state(s: &str, chamber: ipk_core::systems::Chamber) -> Result<OrderedState> {
    let values: std::result::Result<Vec<i64>, _> =
        s.split(',').map(|t| t.trim().parse::<i64>()).collect();
    let values = values.map_err(|e| Error::Parse(format!("state '{s}': {e}")))?;
    OrderedState::new(values, chamber)
}

/// A report with the stable field order
/// {"command","params","value","tail_bound","checks","seed"}.
fn report(
    command: &str,
    params: Map<String, Value>,
    value: Value,
    tail_bound: &Rational,
    checks: Vec<Value>,
    seed: u64,
) -> Value {
    let mut map = Map::new();
    map.insert("command".into(), json!(command));
    map.insert("params".into(), Value::Object(params));
    map.insert("value".into(), value);
    map.insert("tail_bound".into(), json!(format_rational(tail_bound)));
    map.insert("checks".into(), Value::Array(checks));
    map.insert("seed".into(), json!(seed));
    Value::Object(map)
}

fn check_json(name: &str, lhs: &str, rhs: &str, pass: bool) -> Value {
    let mut map = Map::new();
    map.insert("name".into(), json!(name));
    map.insert("lhs".into(), json!(lhs));
    map.insert("rhs".into(), json!(rhs));
    map.insert("pass".into(), json!(pass));
    Value::Object(map)
}

/// IPK_THREADS may cap internal parallelism; all computations are
/// deterministic regardless, so the cap only has to be well-formed.
fn read_thread_cap() -> Result<Option<usize>> {
    match std::env::var("IPK_THREADS") {
        Ok(v) => {
            let cap: usize = v
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("IPK_THREADS '{v}': {e}")))?;
            if cap == 0 {
                return Err(Error::Parse("IPK_THREADS must be positive".into()));
            }
            Ok(Some(cap))
        }
        Err(_) => Ok(None),
    }
}

fn cmd_kernel(args: &KernelArgs) -> Result<(String, bool)> {
    let case = CaseId::from_str_loose(&args.case)?;
    let p = parse_weights(&args.p)?;
    let from = parse_state(&args.from, case.chamber())?;
    let to = parse_state(&args.to, case.chamber())?;
    let tol = parse_rational(&args.tol)?;
    if from.len() != p.len() || to.len() != p.len() {
        return Err(Error::Dimension(
            "--from/--to length must match --p".into(),
        ));
    }
    let mut checks = Vec::new();
    let mut tail = Rational::zero();
    let value = match args.method.as_str() {
        "theorem" => theorem_kernel(case, &from, &to, args.n, &p)?,
        "power" => {
            let kernel = match args.window {
                Some(cap) => {
                    let k = n_step_kernel(case, &from, args.n, &p, cap)?;
                    if k.tail_bound() > &tol {
                        return Err(Error::UncertifiedWindow(format!(
                            "window {cap} leaves tail {} above tol {}",
                            format_rational(k.tail_bound()),
                            format_rational(&tol)
                        )));
                    }
                    k
                }
                None => n_step_kernel_certified(case, &from, args.n, &p, &tol)?,
            };
            tail = kernel.tail_bound().clone();
            kernel.mass_at(to.values())
        }
        "conjugation" => {
            let window = args.window.unwrap_or(48) as i64;
            let core = q_core_via_conjugation(case, &from, &to, args.n, &p, window)?;
            if core.tail_bound > tol {
                return Err(Error::UncertifiedWindow(format!(
                    "window {window} leaves tail {} above tol {}",
                    format_rational(&core.tail_bound),
                    format_rational(&tol)
                )));
            }
            tail = core.tail_bound.clone();
            let agree = (&core.direct - &core.conjugated).abs() <= core.tail_bound;
            checks.push(check_json(
                "determinant core: direct vs conjugated",
                &format_rational(&core.direct),
                &format_rational(&core.conjugated),
                agree,
            ));
            // reassemble the kernel from the conjugated core
            let theta = case.theta(&p)?;
            let mut prefactor = Rational::one();
            for k in 0..p.len() {
                let pk = &p.entries()[k];
                prefactor *= rat_pow(&(Rational::one() - pk), args.n as i64);
                prefactor *= rat_pow(
                    &theta.entries()[k],
                    to.values()[k] - from.values()[k],
                );
            }
            prefactor * core.conjugated
        }
        "mc" => {
            let est = mc_estimate(case, &from, &to, args.n, &p, args.reps, args.seed)?;
            tail = est.stderr_bound.clone();
            checks.push(check_json(
                "stderr bound (conservative, labeled)",
                &format_rational(&est.stderr_bound),
                &format_rational(&est.stderr_bound),
                true,
            ));
            est.estimate
        }
        other => return Err(Error::Parse(format!("unknown method '{other}'"))),
    };
    let value_s = format_rational(&value);
    let out = match args.format.as_str() {
        "csv" => format!("value,tail_bound\n{},{}\n", value_s, format_rational(&tail)),
        "json" => {
            let mut params = Map::new();
            params.insert("case".into(), json!(format!("{case:?}")));
            params.insert("n".into(), json!(args.n));
            params.insert("p".into(), json!(args.p));
            params.insert("from".into(), json!(args.from));
            params.insert("to".into(), json!(args.to));
            params.insert("method".into(), json!(args.method));
            if let Some(w) = args.window {
                params.insert("window".into(), json!(w));
            }
            params.insert("tol".into(), json!(args.tol));
            if args.method == "mc" {
                params.insert("reps".into(), json!(args.reps));
            }
            let r = report("kernel", params, json!(value_s), &tail, checks, args.seed);
            serde_json::to_string_pretty(&r).unwrap()
        }
        other => return Err(Error::Parse(format!("unknown format '{other}'"))),
    };
    Ok((out, true))
}

fn cmd_verify(args: &VerifyArgs) -> Result<(String, bool)> {
    let p = args.p.as_deref().map(parse_weights).transpose()?;
    let tol = parse_rational(&args.tol)?;
    let items = run_suite(
        &args.suite,
        args.n_particles,
        args.n,
        p.as_ref(),
        args.seed,
        &tol,
    )?;
    let ok = ipk_core::verify::all_pass(&items);
    let checks: Vec<Value> = items
        .iter()
        .map(|c| check_json(&c.name, &c.lhs, &c.rhs, c.pass))
        .collect();
    let mut params = Map::new();
    params.insert("suite".into(), json!(args.suite));
    params.insert("N".into(), json!(args.n_particles));
    params.insert("n".into(), json!(args.n));
    if let Some(ps) = &args.p {
        params.insert("p".into(), json!(ps));
    }
    params.insert("tol".into(), json!(args.tol));
    let r = report(
        "verify",
        params,
        json!(if ok { "all checks passed" } else { "checks failed" }),
        &Rational::zero(),
        checks,
        args.seed,
    );
    Ok((serde_json::to_string_pretty(&r).unwrap(), ok))
}

/// CSV innovation grid: N data rows of n nonnegative integers, with an
/// optional header row of non-numeric labels.
fn load_grid(path: &std::path::Path) -> Result<InnovationGrid> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<u64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<u64>, _> =
            line.split(',').map(|t| t.trim().parse::<u64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(e) if idx == 0 && rows.is_empty() => {
                // tolerate a single header row
                let _ = e;
            }
            Err(e) => return Err(Error::Parse(format!("row {}: {e}", idx + 1))),
        }
    }
    InnovationGrid::new(rows)
}

fn cmd_rsk(args: &RskArgs) -> Result<(String, bool)> {
    let variant = Variant::from_str_loose(&args.variant)?;
    let grid = load_grid(&args.xi)?;
    let result = correspond(variant, &grid)?;
    let n_particles = grid.particles();
    let case = variant.matched_case();
    let side = variant.edge_side();
    // the matched recursion path, straight from the grid
    let mut recursion = vec![OrderedState::zero(n_particles, case.chamber())];
    for t in 1..=grid.steps() {
        recursion.push(ipk_core::systems::step_case(
            case,
            recursion.last().unwrap(),
            &grid.column(t),
        )?);
    }
    let edge_path: Result<Vec<OrderedState>> = result
        .tableaux
        .iter()
        .map(|t| edge_vector(t, side, n_particles))
        .collect();
    let edge_path = edge_path?;
    let coupling = edge_path
        .iter()
        .zip(recursion.iter())
        .all(|(a, b)| a.values() == b.values());
    let value = json!({
        "p_tableau": result.final_tableau().rows(),
        "shape_path": result.shapes.iter().map(|s| s.parts().to_vec()).collect::<Vec<_>>(),
        "edge_path": edge_path.iter().map(|s| s.values().to_vec()).collect::<Vec<_>>(),
        "recursion_path": recursion.iter().map(|s| s.values().to_vec()).collect::<Vec<_>>(),
        "coupling": coupling,
    });
    let checks = vec![check_json(
        "edge path equals matched recursion",
        &format!("{:?}", edge_path.last().unwrap().values()),
        &format!("{:?}", recursion.last().unwrap().values()),
        coupling,
    )];
    let mut params = Map::new();
    params.insert("variant".into(), json!(args.variant));
    params.insert("xi".into(), json!(args.xi.display().to_string()));
    let r = report("rsk", params, value, &Rational::zero(), checks, 0);
    Ok((serde_json::to_string_pretty(&r).unwrap(), coupling))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(String, bool)> {
    let case = CaseId::from_str_loose(&args.case)?;
    let p = parse_weights(&args.p)?;
    let y0 = match &args.y0 {
        Some(s) => parse_state(s, case.chamber())?,
        None => OrderedState::zero(p.len(), case.chamber()),
    };
    let path = sample_path(case, &y0, args.n, &p, args.seed)?;
    let csv: String = path
        .iter()
        .map(|s| {
            s.values()
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    let out = match args.format.as_str() {
        "csv" => csv,
        "json" => {
            let mut params = Map::new();
            params.insert("case".into(), json!(format!("{case:?}")));
            params.insert("n".into(), json!(args.n));
            params.insert("p".into(), json!(args.p));
            if let Some(y) = &args.y0 {
                params.insert("y0".into(), json!(y));
            }
            let value = json!(path.iter().map(|s| s.values().to_vec()).collect::<Vec<_>>());
            let r = report("simulate", params, value, &Rational::zero(), vec![], args.seed);
            serde_json::to_string_pretty(&r).unwrap()
        }
        other => return Err(Error::Parse(format!("unknown format '{other}'"))),
    };
    Ok((out, true))
}

fn run() -> Result<(String, bool)> {
    let cli = Cli::parse();
    let _threads = read_thread_cap()?;
    match &cli.command {
        Command::Kernel(a) => cmd_kernel(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Rsk(a) => cmd_rsk(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok((out, ok)) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
