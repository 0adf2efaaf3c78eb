mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use whrf::vqe::ExperimentConfig;

use config::*;
use error::{CliError, CliResult};
use output::Manifest;

#[derive(Parser)]
#[command(name = "whrf", version, about = "Loss-landscape experiments for randomized VQAs")]
struct Cli {
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true, env = "WHRF_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, env = "WHRF_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral statistics of a Fermi-Hubbard instance as JSON.
    Hamiltonian {
        /// TOML config or a manifest.json from an earlier run.
        config: PathBuf,
        /// Also compare MGFs and the loss histogram against the WHRF laws.
        #[arg(long)]
        validate: bool,
    },
    /// Batch of VQE trainings with the predicted band.
    Experiment { config: PathBuf },
    /// One instance of an experiment config, with its energy trajectory.
    Train {
        config: PathBuf,
        #[arg(long)]
        instance: Option<usize>,
    },
    /// Predicted band, solver band edge and CCH density for a given γ.
    Predict { config: PathBuf },
    /// Monte Carlo critical-point profile over an energy grid.
    Crt { config: PathBuf },
    /// Sampled spectra of C(x) with the free-probability density.
    Spectrum { config: PathBuf },
}

fn finish<T: Serialize>(
    cli: &Cli,
    name: &str,
    cfg: &T,
    seed: u64,
    run: impl FnOnce() -> CliResult<commands::Run>,
) -> CliResult<()> {
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let out = run()?;
    let manifest = Manifest {
        command: name.to_string(),
        config: serde_json::to_value(cfg)?,
        seed,
        artifacts: Vec::new(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
    };
    let path = out.outputs.write(&cli.out_dir, manifest)?;
    // A closed stdout (e.g. piped into `head`) is not a failure of the run.
    let _ = writeln!(std::io::stdout(), "{}", out.stdout);
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn load_train(path: &Path, instance: Option<usize>) -> CliResult<TrainCommand> {
    let mut cfg = if path.extension().is_some_and(|e| e == "json") {
        load::<TrainCommand>(path, "train")?
    } else {
        TrainCommand {
            experiment: load::<ExperimentConfig>(path, "train")?,
            instance: 0,
        }
    };
    if let Some(i) = instance {
        cfg.instance = i;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::user("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::user(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Hamiltonian { config, validate } => {
            let mut cfg: HamiltonianCommand = load(config, "hamiltonian")?;
            cfg.validate |= *validate;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            commands::validate_hamiltonian(&cfg)?;
            finish(cli, "hamiltonian", &cfg, cfg.seed, || commands::hamiltonian(&cfg))
        }
        Command::Experiment { config } => {
            let mut cfg: ExperimentConfig = load(config, "experiment")?;
            if let Some(s) = cli.seed {
                cfg.master_seed = s;
            }
            cfg.validate()?;
            finish(cli, "experiment", &cfg, cfg.master_seed, || commands::experiment(&cfg))
        }
        Command::Train { config, instance } => {
            let mut cfg = load_train(config, *instance)?;
            if let Some(s) = cli.seed {
                cfg.experiment.master_seed = s;
            }
            cfg.experiment.validate()?;
            finish(cli, "train", &cfg, cfg.experiment.master_seed, || commands::train(&cfg))
        }
        Command::Predict { config } => {
            let mut cfg: PredictCommand = load(config, "predict")?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            commands::validate_predict(&cfg)?;
            finish(cli, "predict", &cfg, cfg.seed, || commands::predict(&cfg))
        }
        Command::Crt { config } => {
            let mut cfg: CrtCommand = load(config, "crt")?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            commands::validate_crt(&cfg)?;
            finish(cli, "crt", &cfg, cfg.seed, || commands::crt(&cfg))
        }
        Command::Spectrum { config } => {
            let mut cfg: SpectrumCommand = load(config, "spectrum")?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            commands::validate_spectrum(&cfg)?;
            finish(cli, "spectrum", &cfg, cfg.seed, || commands::spectrum(&cfg))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
