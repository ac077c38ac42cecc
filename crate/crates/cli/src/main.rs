use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

/// Bayesian variable selection for probit mixed models.
#[derive(Parser, Debug)]
#[command(name = "ridge-ssvs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set tau0=100`. Repeatable; wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate training/validation CSVs and a truth JSON.
    ///
    /// Config keys: seed, variant (full | base280 | analog).
    Simulate {
        /// Output directory (must exist).
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// `full` (300 columns), `base280` (first 280 only) or `analog`.
        #[arg(long)]
        variant: Option<String>,
        /// Replace existing files.
        #[arg(long)]
        overwrite: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print λ, τ and tr(XᵀX) for a design.
    ///
    /// Config keys: tau0, epsilon.
    Calibrate {
        /// Dataset CSV.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        tau0: Option<f64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run seeded SSVS or Bayesian Lasso chains.
    ///
    /// Config keys: method, chains, seed, burn_in, post_burn_in,
    /// mh_inner_iters, flip_count, init_model_size, tau0, tau, lambda,
    /// epsilon, expected_size, ig_shape, ig_scale, lasso_e, lasso_f,
    /// ci_level, levels. Chain k uses seed + k.
    Run {
        /// Training CSV.
        #[arg(long)]
        data: PathBuf,
        /// Output directory (must exist).
        #[arg(long)]
        out: PathBuf,
        /// Chains run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        overwrite: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Aggregate run directories into selections, a count table and CW_rel.
    ///
    /// Config keys: rule (gap | fixed | beta | lambda | ci), threshold,
    /// gap_window, gap_dominance, refit_seed, refit_burn_in,
    /// refit_iterations.
    Report {
        /// Directories written by `run`. All must use the same method.
        #[arg(long = "runs", required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Refit the consensus selection and score it on `--valid`.
        #[arg(long, requires_all = ["train", "valid"])]
        refit: bool,
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long)]
        overwrite: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            out,
            seed,
            variant,
            overwrite,
            cfg,
        } => commands::simulate(&out, seed, variant, overwrite, &cfg),
        Command::Calibrate { data, tau0, cfg } => commands::calibrate(&data, tau0, &cfg),
        Command::Run {
            data,
            out,
            jobs,
            overwrite,
            cfg,
        } => commands::run(&data, &out, jobs, overwrite, &cfg),
        Command::Report {
            runs,
            out,
            refit,
            train,
            valid,
            overwrite,
            cfg,
        } => {
            let refit = refit.then(|| (train.unwrap(), valid.unwrap()));
            commands::report(&runs, &out, refit, overwrite, &cfg)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
