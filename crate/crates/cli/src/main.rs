//! Command-line driver: solve, verify, trace, slice, farfield.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::CliFailure;
use config::{MethodChoice, RunConfig};

#[derive(Parser)]
#[command(
    name = "hydronozzle",
    about = "Steady hydrostatic nozzle flow solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the flow and write field.csv plus summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Slice solver (overrides the config).
        #[arg(long)]
        solver: Option<MethodChoice>,
        /// Grid override, e.g. `200x200`.
        #[arg(long)]
        grid: Option<String>,
        /// Truncation abscissa override.
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Re-solve and run the invariant suite; exit 0 iff all checks pass.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid override, e.g. `200x200`.
        #[arg(long)]
        grid: Option<String>,
        /// Truncation abscissa override.
        #[arg(long)]
        cutoff: Option<f64>,
        /// Check the analytic non-shear fixture instead of the config flow.
        #[arg(long)]
        counterexample: bool,
        /// Inject deterministic vertical-velocity noise of this amplitude
        /// (diagnostic switch; makes the divergence check fail).
        #[arg(long)]
        inject_v2_noise: Option<f64>,
    },
    /// Trace streamlines from seed points through the solved flow.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed point `X1,X2`; repeat for several seeds.
        #[arg(long = "seed", allow_hyphen_values = true)]
        seeds: Vec<String>,
        /// Integration span (negative traces upstream).
        #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
        t_span: f64,
        /// RK4 step size.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
    },
    /// Solve a single vertical slice at a given abscissa.
    Slice {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        y1: f64,
        #[arg(long)]
        solver: Option<MethodChoice>,
    },
    /// Compute the far-field limit states on both ends.
    Farfield {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply_overrides(
    cfg: &mut RunConfig,
    out: Option<PathBuf>,
    solver: Option<MethodChoice>,
    grid: Option<String>,
    cutoff: Option<f64>,
) -> Result<(), CliFailure> {
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    if let Some(method) = solver {
        cfg.solver.method = method;
    }
    if let Some(spec) = grid {
        let (a, b) = spec
            .split_once(['x', 'X'])
            .ok_or_else(|| CliFailure::Config(format!("bad --grid `{spec}` (expected NY1xNY2)")))?;
        cfg.grid.ny1 = a
            .parse()
            .map_err(|_| CliFailure::Config(format!("bad --grid `{spec}`")))?;
        cfg.grid.ny2 = b
            .parse()
            .map_err(|_| CliFailure::Config(format!("bad --grid `{spec}`")))?;
    }
    if let Some(x) = cutoff {
        cfg.grid.cutoff = x;
    }
    cfg.validate().map_err(CliFailure::from)
}

fn parse_seed(s: &str) -> Result<(f64, f64), CliFailure> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| CliFailure::Config(format!("bad --seed `{s}` (expected X1,X2)")))?;
    match (a.trim().parse(), b.trim().parse()) {
        (Ok(x1), Ok(x2)) => Ok((x1, x2)),
        _ => Err(CliFailure::Config(format!("bad --seed `{s}`"))),
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("HYDRONOZZLE_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn run() -> Result<(), CliFailure> {
    let cli = Cli::parse();
    init_thread_pool();
    match cli.command {
        Command::Solve {
            config,
            out,
            solver,
            grid,
            cutoff,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            apply_overrides(&mut cfg, out, solver, grid, cutoff)?;
            let dir = cfg.output.dir.clone();
            commands::cmd_solve(&cfg, &dir)
        }
        Command::Verify {
            config,
            out,
            grid,
            cutoff,
            counterexample,
            inject_v2_noise,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            apply_overrides(&mut cfg, out, None, grid, cutoff)?;
            let dir = cfg.output.dir.clone();
            commands::cmd_verify(&cfg, &dir, counterexample, inject_v2_noise)
        }
        Command::Trace {
            config,
            out,
            seeds,
            t_span,
            step,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            apply_overrides(&mut cfg, out, None, None, None)?;
            let dir = cfg.output.dir.clone();
            let seeds: Result<Vec<_>, _> = seeds.iter().map(|s| parse_seed(s)).collect();
            commands::cmd_trace(&cfg, &dir, &seeds?, t_span, step)
        }
        Command::Slice {
            config,
            out,
            y1,
            solver,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            apply_overrides(&mut cfg, out, solver, None, None)?;
            let dir = cfg.output.dir.clone();
            commands::cmd_slice(&cfg, &dir, y1)
        }
        Command::Farfield { config, out } => {
            let mut cfg = RunConfig::load(&config)?;
            apply_overrides(&mut cfg, out, None, None, None)?;
            let dir = cfg.output.dir.clone();
            commands::cmd_farfield(&cfg, &dir)
        }
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(failure) => {
            let (kind, detail) = match &failure {
                CliFailure::Config(m) => ("config", serde_json::json!({ "message": m })),
                CliFailure::Solver(m) => ("solver", serde_json::json!({ "message": m })),
                CliFailure::Verification(names) => (
                    "verification",
                    serde_json::json!({ "failed_checks": names }),
                ),
            };
            let payload = serde_json::json!({ "error": { "kind": kind, "detail": detail } });
            println!("{}", serde_json::to_string_pretty(&payload).unwrap());
            std::process::exit(failure.exit_code());
        }
    }
}
