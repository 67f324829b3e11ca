use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fellerdep::processes::presets;
use fellerdep_cli::run::{run_and_report, RunOptions};

#[derive(Parser)]
#[command(
    name = "feller-dep",
    version,
    about = "Dependence experiments for jump-Feller processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        #[arg(long, env = "FELLERDEP_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the built-in process presets.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Run {
            config,
            seed,
            paths,
            jobs,
            out,
        } => {
            let opts = RunOptions {
                seed,
                n_paths: paths,
                jobs,
                out,
            };
            ExitCode::from(run_and_report(&config, &opts) as u8)
        }
        Command::ListPresets => {
            for p in presets::PRESETS {
                println!("{:<28} {:<38} {}", p.name, p.family, p.summary);
            }
            ExitCode::SUCCESS
        }
    }
}
