mod cli;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use commands::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("qlna: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }

    let result = match &cli.command {
        Command::Derive(a) => commands::derive(a),
        Command::Modes(a) => commands::modes(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::SweepPhotons(a) => commands::sweep_cmd("sweep-photons", a),
        Command::SweepNf(a) => commands::sweep_cmd("sweep-nf", a),
        Command::Validate(a) => commands::validate_cmd(a),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Compute(msg)) => {
            eprintln!("qlna {}: {msg}", cli.command.verb());
            ExitCode::from(1)
        }
        Err(Failure::Validation) => {
            eprintln!("qlna validate: one or more invariants failed");
            ExitCode::from(3)
        }
    }
}
