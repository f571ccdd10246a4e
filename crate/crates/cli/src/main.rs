//! `lampi-sr check <file>`: check subject reduction for every rewrite rule
//! of a `.lp` file.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lampi_core::driver::{run, OutputFormat, RunConfig};
use lampi_core::DEFAULT_FUEL;

#[derive(Parser)]
#[command(name = "lampi-sr", version, about = "Subject-reduction checker for λΠ rewrite rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every rule of a file.
    Check {
        file: PathBuf,
        /// Reduction step budget per rule.
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Symbol precedence for completion, highest first, e.g. "a>b>c".
        /// `^x` names the hat of variable x.
        #[arg(long)]
        prec: Option<String>,
        /// Emit a JSON report.
        #[arg(long)]
        json: bool,
        /// Treat warnings as failures.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let Command::Check { file, fuel, prec, json, strict } = Cli::parse().command;
    let cfg = RunConfig {
        input: file,
        fuel,
        precedence: prec,
        format: if json { OutputFormat::Json } else { OutputFormat::Text },
        strict,
    };
    let outcome = run(&cfg);
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(outcome.report.as_bytes());
    let _ = stdout.flush();
    ExitCode::from(outcome.exit_code as u8)
}
