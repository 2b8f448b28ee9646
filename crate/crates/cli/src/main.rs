use std::process::ExitCode;

use clap::Parser;

use vocab_tutor_cli::{run, Cli, Failure};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage mistakes are validation errors; clap's own code 2 would
            // read as a storage failure.
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Failure::VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
