// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfluct::validation::{run_validation, Level};
use qfluct_cli::{map_info, run::run_config_file};

#[derive(Parser)]
#[command(
    name = "qfluct",
    version,
    about = "Fluctuation relations for open quantum dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML file.
    Run { config: PathBuf },
    /// Run the built-in self-checks.
    Validate {
        /// Include the slower convergence checks.
        #[arg(long)]
        full: bool,
    },
    /// Print CPTP and invertibility diagnostics of a map file.
    MapInfo { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => match run_config_file(&config) {
            Ok(summary) => {
                for f in &summary.files {
                    println!("wrote {}", f.display());
                }
                for n in &summary.notes {
                    eprintln!("note: {n}");
                }
                match summary.numerical {
                    Some(msg) => {
                        eprintln!("numerical error: {msg}");
                        ExitCode::from(3)
                    }
                    None => ExitCode::SUCCESS,
                }
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code())
            }
        },
        Command::Validate { full } => {
            let level = if full { Level::Full } else { Level::Fast };
            let results = run_validation(level);
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                println!("{}", r.line());
            }
            println!("summary checks={} failed={}", results.len(), failed);
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::MapInfo { file } => match map_info(&file) {
            Ok(s) => {
                print!("{s}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}
