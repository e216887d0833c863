use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dradar::commands::{self, Method, Session};
use dradar::config::TransportKind;
use dradar::{CliError, CliResult, ScenarioConfig};

#[derive(Parser)]
#[command(name = "dradar", version, about = "Distributed sparse radar imaging with sharing ADMM")]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario, used when no --config is given.
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Output directory, overriding the scenario's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed, overriding the scenario's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Inproc,
    Tcp,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario file to start from.
    Init {
        path: PathBuf,
    },
    /// Simulate per-sensor echoes and write them with the ground truth.
    Simulate,
    /// Reconstruct an image from simulated echoes.
    Reconstruct {
        #[arg(long, value_enum)]
        method: Method,
    },
    /// Run BP, SADMM and ASADMM on the same echoes and tabulate them.
    Compare,
    /// Run the configured solver as sensor and fusion nodes.
    RunDistributed {
        #[arg(long, value_enum, default_value = "inproc")]
        transport: Transport,
    },
}

fn load(cli: &Cli) -> CliResult<ScenarioConfig> {
    let mut cfg = match (&cli.config, cli.preset) {
        (Some(path), _) => ScenarioConfig::load(path)?,
        (None, Some(Preset::Desk)) => ScenarioConfig::desk(),
        (None, Some(Preset::Full)) => ScenarioConfig::full(),
        (None, None) => return Err(CliError::Usage("pass --config <file> or --preset <desk|full>".into())),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> CliResult<()> {
    let cfg = load(&cli)?;
    if let Command::Init { path } = &cli.command {
        cfg.save(path)?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    let session = Session::new(cfg)?;
    match cli.command {
        Command::Init { .. } => unreachable!(),
        Command::Simulate => println!("{}", commands::simulate(&session)?),
        Command::Reconstruct { method } => println!("{}", commands::reconstruct(&session, method)?.summary()),
        Command::Compare => print!("{}", commands::compare(&session)?.table()),
        Command::RunDistributed { transport } => {
            let kind = match transport {
                Transport::Inproc => TransportKind::Inproc,
                Transport::Tcp => TransportKind::Tcp,
            };
            println!("{}", commands::run_distributed_cmd(&session, kind)?.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dradar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
