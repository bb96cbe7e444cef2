use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use csf_cli::checks::{parse_checks, verify_trajectory};
use csf_cli::config::RunConfig;
use csf_cli::reflect::{reflect_trajectory, ReflectOptions};
use csf_cli::simulate::simulate;
use csf_cli::snapshot::{read_stream, to_trajectory};
use csf_cli::sweep::{sweep, SweepSpec};
use csf_cli::{CliError, Result};
use csf_core::flow::{circle_oracle, CircleOracle};
use csf_core::reflection::DEFAULT_FIBER_GRID;

/// Curve shortening flow on the unit sphere.
#[derive(Parser)]
#[command(name = "csf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write snapshots, summary and CSV.
    Simulate { config: PathBuf },
    /// Evaluate monitors over a snapshot stream.
    Verify {
        trajectory: PathBuf,
        /// Comma-separated check names, or `all`.
        #[arg(long, short, num_args = 0.., default_value = "all")]
        checks: Vec<String>,
        #[arg(long)]
        json: bool,
    },
    /// Compare tilted reflections of every state and test the final state for symmetry.
    Reflect {
        trajectory: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.3, 0.6])]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 32)]
        directions: usize,
        #[arg(long, default_value_t = DEFAULT_FIBER_GRID)]
        fiber_grid: usize,
        #[arg(long, default_value_t = 64)]
        symmetry_grid: usize,
        /// Accept tilts in (0, pi/2).
        #[arg(long)]
        exploratory: bool,
        #[arg(long)]
        json: bool,
    },
    /// Run a grid of configurations and write one aggregated table.
    Sweep { spec: PathBuf },
    /// Print the shrinking-circle solution at time `t`.
    Oracle {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true, conflicts_with = "phi0", required_unless_present = "phi0")]
        t_collapse: Option<f64>,
        /// Latitude at t = 0, instead of the collapse time.
        #[arg(long)]
        phi0: Option<f64>,
    },
}

/// Writes a line to stdout; a closed pipe (as with `| head`) is not an error.
fn emit(text: &str) -> Result<()> {
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::Io { file: "<stdout>".into(), source: e })
        }
        _ => Ok(()),
    }
}

/// Exit status 0 on success, 1 when a check fails, 2 on errors.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Simulate { config } => {
            let config = RunConfig::load(&config)?;
            let out = simulate(&config)?;
            emit(&serde_json::to_string_pretty(&out.summary)?)?;
            eprintln!("wrote {}, {}, {}", out.snapshots.display(), out.summary_path.display(), out.csv.display());
            Ok(true)
        }
        Command::Verify { trajectory, checks, json } => {
            let checks = parse_checks(&checks)?;
            let traj = to_trajectory(&read_stream(&trajectory)?)?;
            let report = verify_trajectory(&traj, &checks)?;
            if json {
                emit(&serde_json::to_string_pretty(&report)?)?;
            } else {
                emit(report.table().trim_end())?;
            }
            Ok(report.passed())
        }
        Command::Reflect { trajectory, delta, directions, fiber_grid, symmetry_grid, exploratory, json } => {
            let options = ReflectOptions { deltas: delta, directions, fiber_grid, symmetry_grid, exploratory };
            options.validate()?;
            let traj = to_trajectory(&read_stream(&trajectory)?)?;
            let report = reflect_trajectory(&traj, &options)?;
            if json {
                emit(&serde_json::to_string_pretty(&report)?)?;
            } else {
                emit(report.table().trim_end())?;
            }
            Ok(true)
        }
        Command::Sweep { spec } => {
            let report = sweep(&SweepSpec::load(&spec)?)?;
            eprintln!("wrote {}", report.table.display());
            if report.failed > 0 {
                return Err(CliError::SweepFailures { failed: report.failed, total: report.rows.len() });
            }
            Ok(true)
        }
        Command::Oracle { t, t_collapse, phi0 } => {
            let tc = match (t_collapse, phi0) {
                (Some(tc), _) => tc,
                (None, Some(phi0)) => CircleOracle::through_latitude(phi0, 0.0)?.t_collapse,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let values = circle_oracle(t, tc)?;
            emit(&serde_json::json!({ "t": t, "t_collapse": tc, "values": values }).to_string())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
