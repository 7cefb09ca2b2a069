use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wigner_flow_cli::config::ConfigFile;
use wigner_flow_cli::{presets, run_scenario, CliError, RunOptions, ScenarioConfig};

/// Wigner functions, flows and flow topology for harmonic, Kerr and Morse oscillators.
#[derive(Parser)]
#[command(name = "wflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a scenario and write its artifacts.
    Run {
        /// JSON scenario file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Built-in scenario name.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evaluate quadratures on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        command: PresetsCommand,
    },
    /// Check a scenario file and report every problem.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum PresetsCommand {
    /// Names and descriptions.
    List,
    /// The full scenario behind a name, as a config file.
    Show { name: String },
}

/// Prints to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    ConfigFile::parse(&text)?.resolve()
}

fn from_preset(name: &str) -> Result<ScenarioConfig, CliError> {
    ConfigFile {
        preset: Some(name.to_string()),
        ..Default::default()
    }
    .resolve()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            preset,
            out,
            serial,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => load(&path)?,
                (None, Some(name)) => from_preset(&name)?,
                (None, None) => unreachable!("clap requires one of --config, --preset"),
            };
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let manifest = run_scenario(&cfg, &RunOptions { parallel: !serial })?;
            emit(&format!(
                "wrote {} artifacts to {} ({:.2} s, config {})",
                manifest.artifacts.len(),
                cfg.output_dir.display(),
                manifest.wall_time_seconds,
                &manifest.config_hash[..12]
            ));
        }
        Command::Presets { command } => match command {
            PresetsCommand::List => {
                for (name, description) in presets::PRESETS {
                    emit(&format!("{name:6} {description}"));
                }
            }
            PresetsCommand::Show { name } => {
                let cfg = from_preset(&name)?;
                emit(&serde_json::to_string_pretty(&cfg).expect("config serializes"));
            }
        },
        Command::Validate { config } => {
            let cfg = load(&config)?;
            emit(&format!(
                "ok: {} (config {})",
                config.display(),
                &cfg.hash()[..12]
            ));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
