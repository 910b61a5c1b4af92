//! Command-line runner for the off-policy evaluation benchmarks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ope_core::harness::{
    emit_records_csv, emit_summary_csv, run_experiment, summarize_mse, summarize_tv, ExperimentConfig,
    ExperimentSetup, Method,
};
use ope_core::mdp::{stationary_distribution, Environment, TabularPolicy};
use ope_core::mdp::stationary::{DEFAULT_MAX_ITERS, DEFAULT_TOL};
use ope_core::{OpeError, Result};

#[derive(Parser)]
#[command(name = "ope-bench", about = "Average-reward off-policy evaluation benchmarks")]
struct Cli {
    /// Master seed for policies and data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (overrides the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full sweep: writes records.csv and summary.csv.
    Run { config: PathBuf },
    /// Stationary-distribution quality study: writes tv_records.csv and tv_summary.csv.
    Tv { config: PathBuf },
    /// Prints the target policy's average reward and stationary distribution.
    Oracle { env: String },
    /// Validates an environment's model and its chains.
    EnvCheck { env: String },
}

fn load(path: &Path, cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::from_path(path)?;
    config.master_seed = cli.seed;
    if cli.workers.is_some() {
        config.workers = cli.workers;
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config } => {
            let config = load(config, cli)?;
            let records = run_experiment(&config)?;
            emit_records_csv(&records, &config.output.join("records.csv"))?;
            emit_summary_csv(&summarize_mse(&records), &config.output.join("summary.csv"))?;
            println!("wrote {} records to {}", records.len(), config.output.display());
        }
        Command::Tv { config } => {
            let mut config = load(config, cli)?;
            config.methods.retain(|m| !matches!(m, Method::EmpSingle | Method::Sadl | Method::Mis | Method::Wis));
            if config.methods.is_empty() {
                config.methods = vec![Method::Bch, Method::Emp];
            }
            let records = run_experiment(&config)?;
            emit_records_csv(&records, &config.output.join("tv_records.csv"))?;
            emit_summary_csv(&summarize_tv(&records), &config.output.join("tv_summary.csv"))?;
            println!("wrote {} records to {}", records.len(), config.output.display());
        }
        Command::Oracle { env } => {
            let env: Environment = env.parse()?;
            let mut config = ExperimentConfig::new(env);
            config.master_seed = cli.seed;
            let setup = ExperimentSetup::prepare(&config)?;
            println!("environment = {env}");
            println!("average_reward = {:.16e}", setup.true_value);
            println!("state,stationary_probability");
            for (s, p) in setup.target_stationary.probs().iter().enumerate() {
                println!("{s},{p:.16e}");
            }
        }
        Command::EnvCheck { env } => {
            let env: Environment = env.parse()?;
            let mdp = env.build();
            mdp.validate()?;
            let uniform = TabularPolicy::uniform(mdp.num_states(), mdp.num_actions());
            let d = stationary_distribution(&mdp, &uniform, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
            let embedding = env.state_embedding();
            if embedding.len() != mdp.num_states() {
                return Err(OpeError::InvalidInput("state embedding does not cover every state".into()));
            }
            let min = d.probs().iter().copied().fold(f64::INFINITY, f64::min);
            println!(
                "{env}: {} states, {} actions, ergodic under the uniform policy (min stationary mass {min:.3e})",
                mdp.num_states(),
                mdp.num_actions()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                OpeError::InvalidConfig(_) | OpeError::UnknownMethod(_) | OpeError::UnknownEnvironment(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(3),
            }
        }
    }
}
