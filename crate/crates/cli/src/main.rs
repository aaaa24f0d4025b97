use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use deepmstm_cli::commands;
use deepmstm_cli::{CliError, ForecastMode};

#[derive(Parser)]
#[command(name = "deepmstm", version, about = "Structural time-series forecasting with a CNN-LSTM trend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on the rows up to train.split_date and write params.txt.
    Fit { config: PathBuf },
    /// Forecast the target series after the split.
    Forecast {
        config: PathBuf,
        /// Parameter file; defaults to params.txt in the output directory.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ForecastMode>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Write the trend, seasonal and event components over the test range.
    Decompose {
        config: PathBuf,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Train every arm for every seed and compare test errors.
    Ablate { config: PathBuf },
    /// Generate synthetic series with known components.
    Synth {
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check tape gradients against finite differences.
    VerifyGrad {
        /// Model configuration TOML; a small built-in model otherwise.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit { config } => {
            let dir = commands::fit(&config)?;
            println!("wrote {}", dir.display());
        }
        Command::Forecast {
            config,
            params,
            mode,
            horizon,
        } => {
            let path = commands::forecast(&config, params.as_deref(), mode, horizon)?;
            println!("wrote {}", path.display());
        }
        Command::Decompose { config, params } => {
            let path = commands::decompose(&config, params.as_deref())?;
            println!("wrote {}", path.display());
        }
        Command::Ablate { config } => {
            let dir = commands::ablate(&config)?;
            println!("wrote {}", dir.display());
        }
        Command::Synth { spec, seed, out } => {
            commands::synth(&spec, seed, &out)?;
            println!("wrote {}", out.display());
        }
        Command::VerifyGrad { model, seed, tol } => {
            println!("{}", commands::verify_grad(model.as_deref(), seed, tol)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
