use std::process::ExitCode;

use clap::Parser;
use tree_spectra::cli::{load_config, run, Args, CliError};

fn fail(e: &CliError) -> ExitCode {
    let message = e.to_string().replace('\n', " ");
    eprintln!("error kind={} exit={} message={message:?}", e.kind(), e.exit_code());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match run(&config) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.unconverged {
                eprintln!("error kind=convergence exit=2 message=\"some rows did not converge\"");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => fail(&e),
    }
}
