use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qkd_cli::{CliError, DEFAULT_MAX_KM, DEFAULT_STEP_KM, EXIT_SUCCESS};
use qkd_core::AttackScenario;

#[derive(Parser)]
#[command(
    name = "qkd",
    version,
    about = "BB84 post-processing simulator and secrecy-rate models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate curves of one of the three comparison scenarios.
    Scenario {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEP_KM)]
        step: f64,
        #[arg(long = "max-km", default_value_t = DEFAULT_MAX_KM)]
        max_km: f64,
    },
    /// One seeded end-to-end protocol run.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Rate versus distance for the configured source.
    RateCurve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario: AttackScenario,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEP_KM)]
        step: f64,
        #[arg(long = "max-km", default_value_t = DEFAULT_MAX_KM)]
        max_km: f64,
    },
    /// Classical computational load per block and the required rate.
    LoadBudget {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Scenario {
            id,
            config,
            out,
            step,
            max_km,
        } => qkd_cli::cmd_scenario(id, &config, &out, step, max_km).map(|_| EXIT_SUCCESS),
        Command::Simulate {
            config,
            seed,
            out,
            transcript,
        } => qkd_cli::cmd_simulate(&config, seed, &out, transcript.as_deref()),
        Command::RateCurve {
            config,
            scenario,
            out,
            step,
            max_km,
        } => qkd_cli::cmd_rate_curve(&config, scenario, &out, step, max_km).map(|_| EXIT_SUCCESS),
        Command::LoadBudget { config } => {
            print!("{}", qkd_cli::cmd_load_budget(&config)?);
            Ok(EXIT_SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qkd: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
