use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] perceptor_core::Error),
    #[error("{path}: {source}")]
    File {
        path: String,
        source: perceptor_core::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) | CliError::File { source: e, .. } if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let text = match &cli.command {
        Command::Predict(a) => commands::predict(&cli, a)?,
        Command::Esn(a) => commands::esn(&cli, a)?,
        Command::Rvfl(a) => commands::rvfl(&cli, a)?,
        Command::Subproblem(a) => commands::subproblem(&cli, a)?,
        Command::ReadoutOnly(a) => commands::readout_only(&cli, a)?,
        Command::Metrics(a) => commands::metrics(&cli, a)?,
        Command::Synth(a) => commands::synth(&cli, a)?,
    };
    output::emit(cli.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
