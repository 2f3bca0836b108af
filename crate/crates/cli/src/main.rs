mod commands;
mod failure;
mod plan;
mod scenario;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aerialnet::design::Objective;

use crate::commands::{GridArgs, Outcome};
use crate::failure::Failure;
use crate::plan::SweepPlan;
use crate::scenario::{Scenario, SimulationSection};

#[derive(Parser)]
#[command(name = "aerialnet", version, about = "Analytic and simulated performance of layered aerial networks")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, env = "AERIALNET_WORKERS", global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Per-layer and network STP and ASE as JSON.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// One row per grid point of a sweep plan.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Upper bound on the optimal transmitter density of layer J for layer K.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        j: usize,
        #[arg(long, default_value = "ase")]
        objective: Objective,
    },
    /// Grid search of the transmitter density of layer J below its bound.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        j: usize,
        #[arg(long, default_value = "ase")]
        objective: Objective,
        #[arg(long)]
        min: Option<f64>,
        #[arg(long)]
        max: Option<f64>,
        #[arg(long, default_value_t = 25)]
        per_decade: usize,
    },
    /// Objective against the share of a total density given to layer J.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        k: usize,
        /// Comma-separated total densities, per m².
        #[arg(long = "total-density", value_delimiter = ',', required = true)]
        totals: Vec<f64>,
        #[arg(long, default_value = "ase")]
        objective: Objective,
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Analytic STP against simulation for every typical layer.
    Validate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Raw per-trial simulation outcomes.
    MontecarloDump {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
        /// Typical layer; defaults to the first one.
        #[arg(long)]
        layer: Option<usize>,
    },
}

fn simulation(scenario: &Scenario, sim: &SimArgs, tol: Option<f64>) -> Result<SimulationSection, Failure> {
    let s = SimulationSection {
        trials: sim.trials.unwrap_or(scenario.simulation.trials),
        seed: sim.seed.unwrap_or(scenario.simulation.seed),
        tolerance: tol.unwrap_or(scenario.simulation.tolerance),
        ..scenario.simulation
    };
    let mut issues = Vec::new();
    if s.trials == 0 {
        issues.push("--trials: must be >= 1".to_string());
    }
    if !(s.tolerance > 0.0 && s.tolerance < 1.0) {
        issues.push("--tol: must lie in (0, 1)".to_string());
    }
    if issues.is_empty() {
        Ok(s)
    } else {
        Err(Failure::Invalid(issues))
    }
}

fn run(command: &Command) -> Result<(Outcome, &Common), Failure> {
    let load = |c: &Common| Scenario::load(&c.scenario);
    Ok(match command {
        Command::Evaluate { common } => (commands::evaluate(&load(common)?)?, common),
        Command::Sweep { common, plan, sim } => {
            let scenario = load(common)?;
            let plan = SweepPlan::load(plan)?;
            (commands::sweep(&scenario, &plan, sim.seed, sim.trials)?, common)
        }
        Command::Bound { common, k, j, objective } => (commands::bound(&load(common)?, *k, *j, *objective)?, common),
        Command::Optimize { common, k, j, objective, min, max, per_decade } => {
            let grid = GridArgs { min: *min, max: *max, per_decade: *per_decade };
            (commands::optimize(&load(common)?, *k, *j, *objective, &grid)?, common)
        }
        Command::Split { common, j, k, totals, objective, points } => {
            (commands::split(&load(common)?, *j, *k, totals, *objective, *points)?, common)
        }
        Command::Validate { common, sim, tol } => {
            let scenario = load(common)?;
            let s = simulation(&scenario, sim, *tol)?;
            (commands::validate_scenario(&scenario, &s)?, common)
        }
        Command::MontecarloDump { common, sim, layer } => {
            let scenario = load(common)?;
            let s = simulation(&scenario, sim, None)?;
            (commands::montecarlo_dump(&scenario, *layer, &s)?, common)
        }
    })
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Failure::from),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool: {e}");
        }
    }
    let result = run(&cli.command).and_then(|(outcome, common)| {
        emit(&outcome.text, common.out.as_ref())?;
        outcome.failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("aerialnet: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
