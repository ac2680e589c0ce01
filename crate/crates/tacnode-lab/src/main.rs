use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tacnode_lab::commands::{run, CommandKind, RunContext};
use tacnode_lab::config::LabConfig;
use tacnode_lab::LabError;

#[derive(Debug, Parser)]
#[command(name = "tacnode-lab", version, about = "Tacnode kernel, density and tiling experiments")]
struct Cli {
    #[arg(value_enum)]
    command: CommandKind,
    /// TOML run document.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the output files (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Restricts verify to one suite or a name prefix.
    #[arg(long)]
    only: Option<String>,
}

fn execute(cli: &Cli) -> Result<u8, LabError> {
    let (config, text) = LabConfig::load(&cli.config)?;
    let ctx = RunContext {
        config: &config,
        config_text: &text,
        out: &cli.out,
        seed: cli.seed.unwrap_or(config.seed),
        only: cli.only.as_deref(),
    };
    let outcome = run(cli.command, &ctx)?;
    for f in &outcome.failures {
        eprintln!("flagged: {f}");
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
