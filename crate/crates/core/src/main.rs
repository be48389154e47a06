use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use confocal_opo::scenario::{parse_scenario_file, run_figure, run_file};
use confocal_opo::Error;

/// Multimode squeezing spectra of a degenerate confocal OPO below threshold.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write curve.csv and summary.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Produce the curves of a figure preset (2, 5, 6, 7, 8, 9 or 10).
    Fig {
        #[arg(long)]
        id: u32,
        /// Override a scenario key, e.g. `--set A_p=0.5`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> ExitCode {
    if e.is_numerical() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => std::fs::read_to_string(&config)
            .map_err(|e| Error::Config {
                key: "config".to_string(),
                message: format!("{}: {e}", config.display()),
            })
            .and_then(|text| parse_scenario_file(&text))
            .and_then(|file| run_file(&file, out.as_deref())),
        Command::Fig { id, set, out } => run_figure(id, &set, out.as_deref()),
    };
    match result {
        Ok(written) => {
            for f in written.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
