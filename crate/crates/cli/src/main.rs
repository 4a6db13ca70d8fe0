use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use subassign_cli::{run, Cli, Command};

fn output_path(cli: &Cli) -> Option<&std::path::Path> {
    match &cli.command {
        Command::TgOnline(a) => a.output.as_deref(),
        Command::Ocg(a) => a.output.as_deref(),
        Command::AdSim(a) => a.output.as_deref(),
        _ => None,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let out = match run(&cli) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    // summary goes to stderr when stdout carries the CSV
    let mut summary_to_stdout = true;
    if let Some(csv) = &out.csv {
        let written = match output_path(&cli) {
            Some(path) => std::fs::write(path, csv),
            None => {
                summary_to_stdout = false;
                std::io::stdout().lock().write_all(csv.as_bytes())
            }
        };
        if let Err(e) = written {
            eprintln!("error: cannot write CSV: {e}");
            return ExitCode::from(1);
        }
    }
    if summary_to_stdout {
        print!("{}", out.summary);
    } else {
        eprint!("{}", out.summary);
    }
    ExitCode::SUCCESS
}
