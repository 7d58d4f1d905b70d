//! Command-line front end for the frame-synchronization simulator.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Axis, CommandEnv};
use config::{Profile, SeedOverrides};

/// Environment variable holding the default output root.
const OUT_ENV: &str = "ELMFS_OUT";

#[derive(Parser)]
#[command(
    name = "elmfs",
    version,
    about = "Frame-synchronization simulator: network-aided offset estimation vs correlation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Dataset-generation seed (overrides the config file).
    #[arg(long, global = true)]
    seed_data: Option<u64>,

    /// Weight-initialization seed (overrides the config file).
    #[arg(long, global = true)]
    seed_model: Option<u64>,

    /// Evaluation seed (overrides the config file).
    #[arg(long, global = true)]
    seed_eval: Option<u64>,

    /// Execution scale.
    #[arg(long, global = true, value_enum, default_value = "desk")]
    profile: Profile,

    /// Output directory (default: $ELMFS_OUT/<command>-<timestamp> or
    /// ./elmfs-out/<command>-<timestamp>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write SVG plots next to each CSV.
    #[arg(long, global = true)]
    plot: bool,

    /// Resolve the configuration and write the manifest, then exit
    /// without computing.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training set and fit the metric network.
    Train {
        /// Configuration file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Where to write the model (default: <out>/model.elm).
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Evaluate configured methods over the SNR grid.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Trained model for the 'prop' method (not needed for
        /// corr-only runs).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train + evaluate across one parameter axis, one CSV per value
    /// plus a merged CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter to vary.
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values (e.g. 4,6,8 or hpa1,hpa2).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Train on one configuration, evaluate on another (channel path
    /// count, decay, or amplifier may differ).
    Generalize {
        /// Training-side configuration.
        #[arg(long)]
        config: PathBuf,
        /// Evaluation-side configuration.
        #[arg(long)]
        test_config: PathBuf,
    },
    /// Preprocessing ablation: prop vs corr vs the network fed raw
    /// observations, trained and evaluated in-process.
    Ablate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn default_out_dir(command: &str) -> PathBuf {
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("elmfs-out"));
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    root.join(format!("{command}-{stamp}"))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let command_name = match &cli.command {
        Command::Train { .. } => "train",
        Command::Eval { .. } => "eval",
        Command::Sweep { .. } => "sweep",
        Command::Generalize { .. } => "generalize",
        Command::Ablate { .. } => "ablate",
    };
    let env = CommandEnv {
        profile: cli.profile,
        seeds: SeedOverrides {
            data: cli.seed_data,
            model: cli.seed_model,
            eval: cli.seed_eval,
        },
        out_dir: cli.out.unwrap_or_else(|| default_out_dir(command_name)),
        plot: cli.plot,
        dry_run: cli.dry_run,
    };

    match cli.command {
        Command::Train { config, model_out } => {
            let handle = config::load_file(&config)?;
            commands::cmd_train(&env, &handle, model_out)
        }
        Command::Eval { config, model } => {
            let handle = config::load_file(&config)?;
            commands::cmd_eval(&env, &handle, model)
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let handle = config::load_file(&config)?;
            commands::cmd_sweep(&env, &handle, axis, &values)
        }
        Command::Generalize {
            config,
            test_config,
        } => {
            let train = config::load_file(&config)?;
            let test = config::load_file(&test_config)?;
            commands::cmd_generalize(&env, &train, &test)
        }
        Command::Ablate { config } => {
            let handle = config::load_file(&config)?;
            commands::cmd_ablate(&env, &handle)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            // Missing inputs are usage-class failures.
            let missing_input = err
                .chain()
                .any(|c| c.to_string().starts_with("config not found"));
            if missing_input {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
