use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ldmpc_cli::{run, RunArgs};

#[derive(Parser)]
#[command(name = "ldmpc", version, about = "Governed tracking MPC scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write logs, summaries and plots.
    Run(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(manifest) => {
                for f in &manifest.files {
                    println!("{}  {}", f.sha256, f.path);
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
