mod args;
mod commands;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut err = io::stderr();

    let result = match &cli.command {
        Command::Sweep(a) => commands::sweep(a, &mut out, &mut err),
        Command::Query(a) => commands::query(a, &mut out),
        Command::Analyze(a) => commands::analyze(a, &mut out),
    };
    let _ = out.flush();

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(err, "run `dpbayes --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
