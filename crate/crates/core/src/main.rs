use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use superfield::scenario::{builtin_names, load, run, CheckSelection, RunOptions};

#[derive(Parser)]
#[command(name = "superfield", version, about = "Integrability checks for supersymmetric structural equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a built-in scenario or a `.scn` file.
    Verify(VerifyArgs),
    /// List the built-in scenarios.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct VerifyArgs {
    /// Built-in scenario name or path to a `.scn` file.
    scenario: String,
    /// Run every stage (the default when no stage is selected).
    #[arg(long)]
    all: bool,
    #[arg(long)]
    tables: bool,
    #[arg(long)]
    zcc: bool,
    #[arg(long)]
    invariance: bool,
    #[arg(long)]
    classify: bool,
    #[arg(long)]
    spectral: bool,
    #[arg(long)]
    oracle: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Grassmann generators for the kernel sample.
    #[arg(long, env = "SUPERFIELD_GENERATORS", default_value_t = superfield::grassmann::DEFAULT_GENERATORS)]
    generators: usize,
}

impl VerifyArgs {
    fn selection(&self) -> CheckSelection {
        let picked = CheckSelection {
            tables: self.tables,
            invariance: self.invariance,
            zcc: self.zcc,
            classify: self.classify,
            spectral: self.spectral,
            oracle: self.oracle,
        };
        if self.all || picked.is_empty() {
            CheckSelection::all()
        } else {
            picked
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            let mut out = std::io::stdout().lock();
            for n in builtin_names() {
                let _ = writeln!(out, "{n}");
            }
            ExitCode::SUCCESS
        }
        Command::Verify(args) => {
            let scenario = match load(&args.scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let report = run(&scenario, &RunOptions { checks: args.selection(), generators: args.generators });
            let text = match args.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json() + "\n",
            };
            // A closed pipe (`| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
