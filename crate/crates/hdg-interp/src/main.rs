//! Command-line driver for convergence sweeps.

use clap::{Args, Parser, Subcommand};
use hdg_interp::degree::{DegreeConfig, Variant};
use hdg_interp::error::{Error, Result};
use hdg_interp::problem::ManufacturedProblem;
use hdg_interp::stepping::{DtPolicy, InitialCondition};
use hdg_interp::study::{emit_csv, render_table, run_sweep, SweepConfig};
use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hdg-interp",
    about = "Interpolatory HDG solvers for semilinear reaction-diffusion equations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mesh-refinement convergence sweep and emit a CSV report.
    Sweep(SweepArgs),
}

#[derive(Args, Default)]
struct SweepArgs {
    /// Method variant: A, B, or C.
    #[arg(long)]
    variant: Option<String>,

    /// Flux polynomial degree k.
    #[arg(long)]
    k: Option<usize>,

    /// Comma-separated uniform-refinement levels, e.g. 2,4,8,16,32.
    #[arg(long)]
    levels: Option<String>,

    /// Time-step policy: h (dt = 1/n), h2 (dt = 1/n^2), or fixed:VAL.
    #[arg(long, value_name = "POLICY")]
    dt_policy: Option<String>,

    /// Manufactured problem: chaffee_infante, linear_poly, or custom.
    #[arg(long)]
    problem: Option<String>,

    /// Initial condition: l2 or elliptic.
    #[arg(long)]
    ic: Option<String>,

    /// Final time.
    #[arg(long, value_name = "FLOAT")]
    t: Option<f64>,

    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Use the Newton inner iteration instead of the frozen-matrix one.
    #[arg(long)]
    newton: bool,

    /// Inner-iteration increment tolerance.
    #[arg(long)]
    tol: Option<f64>,

    /// Run on a mesh file (plain-text node/element format) instead of the
    /// uniform family.
    #[arg(long)]
    mesh_file: Option<PathBuf>,

    /// Report error norms at these intermediate times as well.
    #[arg(long, value_name = "T1,T2,...")]
    snapshot_times: Option<String>,

    /// Plain `key = value` file supplying defaults for the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<bool> {
    if let Ok(threads) = std::env::var("HDG_THREADS") {
        let n: usize = threads
            .parse()
            .map_err(|e| Error::Config(format!("bad HDG_THREADS: {e}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep(args) => sweep(args),
    }
}

/// Parse a plain `key = value` file; CLI flags override its entries.
fn load_config_file(path: &PathBuf) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::InvalidArgument(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => HashMap::new(),
    };
    let pick = |cli: Option<String>, key: &str| -> Option<String> {
        cli.or_else(|| file.get(key).cloned())
    };

    let variant: Variant = pick(args.variant, "variant")
        .ok_or_else(|| Error::Config("missing --variant".into()))?
        .parse()?;
    let k = match pick(args.k.map(|v| v.to_string()), "k") {
        Some(s) => s
            .parse::<usize>()
            .map_err(|e| Error::InvalidArgument(format!("bad k: {e}")))?,
        None => return Err(Error::Config("missing --k".into())),
    };
    let config = DegreeConfig::new(variant, k)?;

    let levels: Vec<usize> = match pick(args.levels, "levels") {
        Some(s) => s
            .split(',')
            .filter(|part| !part.is_empty())
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidArgument(format!("bad level {part:?}: {e}")))
            })
            .collect::<Result<_>>()?,
        None => vec![2, 4, 8, 16, 32],
    };
    let dt_policy: DtPolicy = pick(args.dt_policy, "dt_policy")
        .unwrap_or_else(|| "h".into())
        .parse()?;
    let problem = ManufacturedProblem::by_name(
        &pick(args.problem, "problem").unwrap_or_else(|| "chaffee_infante".into()),
    )?;
    let t_final = match pick(args.t.map(|v| v.to_string()), "T") {
        Some(s) => s
            .parse::<f64>()
            .map_err(|e| Error::InvalidArgument(format!("bad T: {e}")))?,
        None => problem.t_final,
    };
    let ic = match pick(args.ic, "ic").as_deref() {
        None | Some("l2") => InitialCondition::L2Projection,
        Some("elliptic") => InitialCondition::EllipticProjection,
        Some(other) => {
            return Err(Error::InvalidArgument(format!(
                "unknown initial condition {other:?} (expected l2 or elliptic)"
            )))
        }
    };

    let mut sweep = SweepConfig::new(levels, dt_policy, t_final);
    sweep.initial_condition = ic;
    sweep.newton = args.newton || file.get("newton").map(|v| v == "true").unwrap_or(false);
    if let Some(tol) = args
        .tol
        .or_else(|| file.get("tol").and_then(|v| v.parse().ok()))
    {
        sweep.tolerance = tol;
    }
    sweep.mesh_file = args
        .mesh_file
        .or_else(|| file.get("mesh_file").map(PathBuf::from));

    println!(
        "Interpolatory HDG ({variant}) k={k}, problem {}, dt policy {:?}, T={t_final}",
        problem.name, sweep.dt_policy
    );
    let result = run_sweep(config, &sweep, &problem);
    print!("{}", render_table(&result));

    if let Some(times) = args.snapshot_times {
        report_snapshots(config, &sweep, &problem, &times)?;
    }

    if let Some(path) = pick(args.out.map(|p| p.display().to_string()), "out") {
        let path = PathBuf::from(path);
        emit_csv(&result, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(result.all_ok())
}

/// Print error norms at intermediate times for the finest level.
fn report_snapshots(
    config: DegreeConfig,
    sweep: &SweepConfig,
    problem: &ManufacturedProblem,
    times: &str,
) -> Result<()> {
    use hdg_interp::operators::ElementOperators;
    use hdg_interp::projector::ReferenceElements;
    use hdg_interp::stepping::{integrate_with_snapshots, TimeConfig};
    use hdg_interp::study::error_norms;
    use std::sync::Arc;

    let snapshot_times: Vec<f64> = times
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad snapshot time {p:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let Some(&n) = sweep.levels.last() else {
        return Ok(());
    };
    let mesh = match &sweep.mesh_file {
        Some(path) => hdg_interp::Mesh::from_file(path)?,
        None => hdg_interp::Mesh::uniform_unit_square(n)?,
    };
    let refs = Arc::new(ReferenceElements::new(config)?);
    let ops = ElementOperators::build_all(&mesh, &refs)?;
    let dt = sweep
        .dt_policy
        .dt(sweep.mesh_file.is_none().then_some(n))?;
    let mut time = TimeConfig::new(sweep.t_final, dt)?;
    time.initial_condition = sweep.initial_condition;
    time.tolerance = sweep.tolerance;
    time.newton = sweep.newton;
    let (_, snapshots, _) = integrate_with_snapshots(&mesh, &ops, &time, problem, &snapshot_times)?;
    println!("snapshots at n={n}:");
    for state in &snapshots {
        let (eq, eu, ep) = error_norms(&ops, state, problem, state.time);
        println!(
            "  t={:.6}: err_q={:.3e} err_u={:.3e} err_u*={:.3e}",
            state.time, eq, eu, ep
        );
    }
    Ok(())
}
