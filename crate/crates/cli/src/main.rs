mod custom;
mod output;
mod presets;
mod run;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpsbound_core::Error as CoreError;

use settings::RunArgs;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("oracle disagreement: max |z| = {0:.3}")]
    Disagreement(f64),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(CoreError::NoConvergence { .. })
            | CliError::Core(CoreError::NoClicks)
            | CliError::Core(CoreError::ProbabilityOutOfRange { .. }) => 3,
            CliError::Core(_) => 2,
            CliError::Disagreement(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dpsbound", version, about = "Sequential USD attack bounds for DPS QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep (M_min, q) in the untrusted-device scenario.
    Untrusted(RunArgs),
    /// Sweep (M_min, q) at M_max = pad in the trusted-device scenario.
    Trusted(RunArgs),
    /// Compare analytic rates with the Monte Carlo simulator at one point.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        /// Newline-delimited JSON log of every simulated click.
        #[arg(long, value_name = "FILE")]
        click_log: Option<PathBuf>,
    },
    /// Figure presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Untrusted(args) => run::run_untrusted(args.resolve()?).map(|_| ()),
        Command::Trusted(args) => run::run_trusted(args.resolve()?).map(|_| ()),
        Command::Oracle { run, click_log } => {
            let report = run::run_oracle(run.resolve()?, click_log.as_deref())?;
            if report.agrees {
                Ok(())
            } else {
                Err(CliError::Disagreement(report.max_abs_z))
            }
        }
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    for p in presets::all() {
                        println!(
                            "{:<28} {:<9} mu={} pad={} m_max={}",
                            p.name, p.scenario, p.mu_alpha, p.pad, p.m_max
                        );
                    }
                }
                PresetAction::Show { name } => {
                    let p = presets::Preset::find(&name)?;
                    print!("{}", toml::to_string(&p).expect("preset serializes"));
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dpsbound: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
