use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radcom::config::ExperimentConfig;
use radcom::experiment;

#[derive(Parser)]
#[command(name = "radcom", version, about = "Multistatic OFDM radar-communication network simulator")]
struct Cli {
    /// Worker threads for map computation (default: all cores). Results
    /// are identical for any worker count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Sweep one parameter over a value list, writing sweep.csv.
    Sweep {
        config: PathBuf,
        /// One of: snr_db, bandwidth_hz, p, q, sigma_t_s, clutter_count.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Parse and validate a config without running anything.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), String> {
    match command {
        Command::Run { config, output_dir } => {
            let cfg = ExperimentConfig::from_path(&config).map_err(|e| e.to_string())?;
            let manifest = experiment::run_experiment(&cfg, output_dir.as_deref())
                .map_err(|e| e.to_string())?;
            for a in &manifest.artifacts {
                println!("{}  {}", a.sha256, a.path);
            }
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            values,
            output_dir,
        } => {
            let cfg = ExperimentConfig::from_path(&config).map_err(|e| e.to_string())?;
            let manifest = experiment::sweep(&cfg, &param, &values, output_dir.as_deref())
                .map_err(|e| e.to_string())?;
            for a in &manifest.artifacts {
                println!("{}  {}", a.sha256, a.path);
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config).map_err(|e| e.to_string())?;
            cfg.validate().map_err(|e| e.to_string())?;
            println!("ok");
            Ok(())
        }
    }
}
