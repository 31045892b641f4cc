//! Config-driven experiment runner for L-BF-IS.
//!
//! Every subcommand reads a TOML [`RunConfig`], applies command-line
//! overrides, runs inside its own worker pool and writes CSV and JSON files to
//! the output directory.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::CliError;

use lbfis::{Approach, Benchmark, InitialState};

#[derive(Debug, Parser)]
#[command(name = "lbfis", version, about = "Langevin bi-fidelity importance sampling for rare-event probabilities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tune ℓ (if configured), estimate Ẑ, run the chains and evaluate N HF samples.
    Estimate(CommonArgs),
    /// Replicated MC, LF-only and L-BF-IS estimates over an N grid.
    Convergence(CommonArgs),
    /// Variance-proxy sweep over a log-spaced ℓ grid.
    TuneEll(TuneArgs),
    /// Overlap probabilities and the normalizer, variance and KL bounds.
    Diagnose(DiagnoseArgs),
    /// Draw chain samples from the biasing density.
    Sample(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Benchmark name, used when no config is given.
    #[arg(long)]
    pub problem: Option<Benchmark>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Start every chain here (comma-separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub z0: Option<Vec<f64>>,
    /// center, reference or resample.
    #[arg(long)]
    pub init: Option<String>,
    /// Fixed ℓ, overriding the config.
    #[arg(long)]
    pub ell: Option<f64>,
    /// Normalizer pool size.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// HF evaluations per estimate.
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Sample sizes for the convergence study (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Proxy: one (HF pilot) or two (LF only).
    #[arg(long)]
    pub method: Option<Approach>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// HF pilot size for approach one.
    #[arg(long = "pilot-L")]
    pub pilot_l: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Joint HF/LF draws for the overlap probabilities.
    #[arg(long)]
    pub n_joint: Option<usize>,
}

fn parse_init(s: &str) -> Result<InitialState, CliError> {
    match s {
        "center" => Ok(InitialState::Center),
        "reference" => Ok(InitialState::Reference),
        "resample" => Ok(InitialState::Resample),
        _ => Err(CliError::Config(format!("unknown init '{s}', expected center, reference or resample"))),
    }
}

/// Loads the config (or a default for `--problem`) and applies the overrides.
pub fn resolve_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, args.problem) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(name)) => RunConfig::for_problem(name),
        (None, None) => return Err(CliError::Config("either --config or --problem is required".into())),
    };
    if let (Some(name), Some(_)) = (args.problem, &args.config) {
        if name != cfg.problem.name {
            return Err(CliError::Config(format!("--problem {name} conflicts with the config problem {}", cfg.problem.name)));
        }
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(o) = &args.out {
        cfg.output_dir = Some(o.clone());
    }
    let m = &mut cfg.mala;
    m.tau = args.tau.unwrap_or(m.tau);
    m.burn_in = args.burn_in.unwrap_or(m.burn_in);
    m.iters = args.iters.unwrap_or(m.iters);
    m.chains = args.chains.unwrap_or(m.chains);
    if let Some(s) = &args.init {
        m.init = parse_init(s)?;
    }
    if let Some(z) = &args.z0 {
        m.init = InitialState::Point(z.clone());
    }
    if let Some(ell) = args.ell {
        cfg.ell.mode = config::EllMode::Fixed;
        cfg.ell.value = ell;
    }
    let e = &mut cfg.estimator;
    e.m = args.m.unwrap_or(e.m);
    e.n = args.n.unwrap_or(e.n);
    e.trials = args.trials.unwrap_or(e.trials);
    if let Some(g) = &args.n_grid {
        e.n_grid = g.clone();
    }
    Ok(cfg)
}

fn resolve_tune(args: &TuneArgs) -> Result<RunConfig, CliError> {
    let mut cfg = resolve_config(&args.common)?;
    let t = &mut cfg.tuning;
    t.method = args.method.unwrap_or(t.method);
    t.grid_min = args.grid_min.unwrap_or(t.grid_min);
    t.grid_max = args.grid_max.unwrap_or(t.grid_max);
    t.grid_points = args.grid_points.unwrap_or(t.grid_points);
    t.pilot_l = args.pilot_l.unwrap_or(t.pilot_l);
    t.replicates = args.replicates.unwrap_or(t.replicates);
    if args.common.m.is_some() {
        t.m = args.common.m;
    }
    Ok(cfg)
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

/// Runs one subcommand and returns the lines it printed.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let (cfg, threads) = match &cli.command {
        Command::Estimate(a) | Command::Convergence(a) | Command::Sample(a) => (resolve_config(a)?, a.threads),
        Command::TuneEll(a) => (resolve_tune(a)?, a.common.threads),
        Command::Diagnose(a) => {
            let mut cfg = resolve_config(&a.common)?;
            cfg.diagnose.n_joint = a.n_joint.unwrap_or(cfg.diagnose.n_joint);
            (cfg, a.common.threads)
        }
    };
    cfg.validate()?;
    let workers = pool(threads)?;
    workers.install(|| match &cli.command {
        Command::Estimate(_) => commands::estimate(&cfg),
        Command::Convergence(_) => commands::convergence(&cfg),
        Command::TuneEll(_) => commands::tune(&cfg),
        Command::Diagnose(_) => commands::diagnose(&cfg),
        Command::Sample(_) => commands::sample(&cfg),
    })
}
