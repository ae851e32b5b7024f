//! Command-line driver: validate a geometry spec, run the check suite,
//! or dump the constructed forms and charts.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qfk",
    about = "Twistor-chart construction and verification over Kähler data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a geometry spec file.
    Validate { spec: PathBuf },
    /// Run the full check suite and print a report.
    Check {
        spec: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of check ids to run.
        #[arg(long)]
        suite: Option<String>,
        /// Override the spec's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output format: json (canonical) or text.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Dump the Kähler form, connection form and contact forms.
    Forms {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump the standardization maps and the gluing-map jet at the base line.
    Charts {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_spec(path: &PathBuf) -> Result<qfk_core::verify::GeometrySpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    qfk_core::verify::parse_spec(&text).map_err(|e| e.to_string())
}

fn write_out(out: &Option<PathBuf>, payload: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Validate { spec } => {
            let parsed = read_spec(&spec)?;
            println!(
                "ok: n={} c={} order={} potential={}",
                parsed.n,
                parsed.c,
                parsed.order,
                parsed.name.as_deref().unwrap_or("explicit")
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            spec,
            out,
            suite,
            seed,
            format,
        } => {
            let mut parsed = read_spec(&spec)?;
            if let Some(seed) = seed {
                parsed.seed = seed;
            }
            let filter: Option<Vec<String>> =
                suite.map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
            let report = qfk_core::verify::run_suite(&parsed, filter.as_deref());
            let payload = match format.as_str() {
                "json" => qfk_core::verify::emit_json(&report),
                "text" => qfk_core::verify::emit_text(&report),
                other => return Err(format!("unknown format `{other}` (use json or text)")),
            };
            write_out(&out, &payload)?;
            Ok(if report.overall_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Forms { spec, out } => {
            let parsed = read_spec(&spec)?;
            let payload = qfk_core::verify::emit_forms(&parsed)?;
            write_out(&out, &payload)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Charts { spec, out } => {
            let parsed = read_spec(&spec)?;
            let payload = qfk_core::verify::emit_charts(&parsed)?;
            write_out(&out, &payload)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
