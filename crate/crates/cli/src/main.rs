use std::process::ExitCode;

use clap::Parser;
use lattice_kpp_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(lines) => {
            if !cli.quiet {
                for line in lines {
                    println!("{line}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("lattice-kpp {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
