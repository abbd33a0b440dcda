use std::process::ExitCode;

use clap::Parser;
use uavsec::cli::{error_record, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("[error]\nkind = \"validation_failed\"");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprint!("{}", error_record(&e));
            ExitCode::from(2)
        }
    }
}
