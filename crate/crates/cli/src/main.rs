//! `ftt`: network loading, equilibrium assignment, sensitivities, rotation
//! analysis, ADMM coordination and tensor decomposition from the command line.
//!
//! Every run writes its artifacts and a `run_manifest.json` into the output
//! directory. Failures print one JSON object on standard error and exit with
//! a nonzero status.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{DecomposeMethod, Method, Objective, ScenarioConfig, StepRuleKind};

#[derive(Debug, Parser)]
#[command(name = "ftt", version, about = "Flow-through-tensor network toolkit")]
struct Cli {
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct NetworkArgs {
    /// Directory holding node.csv, link.csv and demand.csv.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    node: Option<PathBuf>,
    #[arg(long)]
    link: Option<PathBuf>,
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Shortest-path generation rounds for the path set.
    #[arg(long)]
    path_rounds: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct SolverArgs {
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long, value_enum)]
    objective: Option<Objective>,
    /// Relative gap tolerance.
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    step_rule: Option<StepRuleKind>,
    #[arg(long)]
    step_size: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and check a GMNS node/link/demand trio.
    Validate {
        #[command(flatten)]
        network: NetworkArgs,
    },
    /// Traffic assignment (user equilibrium or system optimum).
    Assign {
        #[command(flatten)]
        network: NetworkArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// OD travel-time sensitivity matrix at equilibrium.
    Sensitivity {
        #[command(flatten)]
        network: NetworkArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Rotation outcomes on the Pigou network over (p, beta) grids.
    Rotate {
        #[arg(long)]
        beta_grid: Option<String>,
        #[arg(long)]
        p_grid: Option<String>,
        /// Group-by-day schedule CSV (`group,share,day_1,...`).
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Passenger/vehicle coordination by ADMM.
    Admm {
        /// Instance JSON.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        rho: Option<f64>,
        /// Tolerance on both residuals.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        adaptive_rho: bool,
    },
    /// CP or Tucker decomposition of a tensor JSON file.
    Decompose {
        #[arg(long, value_enum)]
        method: Option<DecomposeMethod>,
        /// CP rank, or comma-separated per-mode Tucker ranks.
        #[arg(long, value_delimiter = ',')]
        rank: Option<Vec<usize>>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        max_sweeps: Option<usize>,
    },
    /// Five-path, three-link worked example of the flow/time chain.
    Example,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Assign { .. } => "assign",
            Command::Sensitivity { .. } => "sensitivity",
            Command::Rotate { .. } => "rotate",
            Command::Admm { .. } => "admm",
            Command::Decompose { .. } => "decompose",
            Command::Example => "example",
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl NetworkArgs {
    fn apply(self, config: &mut ScenarioConfig) {
        let n = &mut config.network;
        set_opt(&mut n.dir, self.network);
        set_opt(&mut n.node, self.node);
        set_opt(&mut n.link, self.link);
        set_opt(&mut n.demand, self.demand);
        set(&mut n.path_rounds, self.path_rounds);
    }
}

impl SolverArgs {
    fn apply(self, config: &mut ScenarioConfig) {
        let s = &mut config.solver;
        set(&mut s.method, self.method);
        set(&mut s.objective, self.objective);
        set(&mut s.gap, self.gap);
        set(&mut s.max_iterations, self.max_iter);
        set(&mut s.step_rule, self.step_rule);
        set_opt(&mut s.step_size, self.step_size);
    }
}

fn effective_config(cli: &mut Cli) -> anyhow::Result<ScenarioConfig> {
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    set_opt(&mut config.out, cli.out.take());
    set_opt(&mut config.seed, cli.seed);
    match &mut cli.command {
        Command::Validate { network } => std::mem::take(network).apply(&mut config),
        Command::Assign { network, solver } | Command::Sensitivity { network, solver } => {
            std::mem::take(network).apply(&mut config);
            std::mem::take(solver).apply(&mut config);
        }
        Command::Rotate {
            beta_grid,
            p_grid,
            schedule,
        } => {
            let r = &mut config.rotation;
            set(&mut r.beta_grid, beta_grid.take());
            set(&mut r.p_grid, p_grid.take());
            set_opt(&mut r.schedule, schedule.take());
        }
        Command::Admm {
            instance,
            rho,
            tol,
            max_iter,
            adaptive_rho,
        } => {
            let a = &mut config.admm;
            set_opt(&mut a.instance, instance.take());
            set(&mut a.rho, *rho);
            set(&mut a.tol, *tol);
            set(&mut a.max_iterations, *max_iter);
            a.adaptive_rho |= *adaptive_rho;
        }
        Command::Decompose {
            method,
            rank,
            input,
            tolerance,
            max_sweeps,
        } => {
            let d = &mut config.decompose;
            set(&mut d.method, *method);
            set(&mut d.rank, rank.take());
            set_opt(&mut d.input, input.take());
            set(&mut d.tolerance, *tolerance);
            set(&mut d.max_sweeps, *max_sweeps);
        }
        Command::Example => {}
    }
    Ok(config)
}

fn init_logging() {
    let level = std::env::var("FTT_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    let filter = match level.to_ascii_lowercase().as_str() {
        "error" => log::LevelFilter::Error,
        "info" => log::LevelFilter::Info,
        "debug" => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(filter)
        .format_timestamp(None)
        .init();
}

fn report(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": kind, "message": message }));
}

fn main() -> ExitCode {
    init_logging();
    let mut cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if !err.use_stderr() => {
            print!("{err}");
            return ExitCode::SUCCESS;
        }
        Err(err) => {
            let text = err.kind().to_string();
            let detail = err.to_string();
            let first = detail
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or(&text)
                .trim_start_matches("error: ");
            report("usage", first);
            return ExitCode::from(2);
        }
    };
    let name = cli.command.name();
    let result = effective_config(&mut cli).and_then(|config| commands::run(name, &config));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            report(commands::error_kind(&err), &format!("{name}: {err:#}"));
            ExitCode::FAILURE
        }
    }
}
