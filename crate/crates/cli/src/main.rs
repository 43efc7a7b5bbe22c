use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use pas_cli::{exit_code, run, Cli};

fn emit(cli: &Cli) -> anyhow::Result<()> {
    let output = run(&cli.command)?;
    match &cli.command.common().out {
        Some(path) => {
            std::fs::write(path, output).with_context(|| format!("writing {}", path.display()))
        }
        None => std::io::stdout()
            .write_all(output.as_bytes())
            .context("writing stdout"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match emit(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
