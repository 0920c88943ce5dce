use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use intrinsic_cli::config::{example, load, EXAMPLE_NAMES};
use intrinsic_cli::scenario::{build, Overrides, Scenario};
use intrinsic_cli::{commands, exit_code, CliError};
use intrinsic_core::Verdict;

/// Intrinsic-stability certificates and simulations for delayed and switched networks.
#[derive(Parser)]
#[command(name = "intrinsic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a network and print the verdict. Exit 0 stable, 2 not stable, 3 marginal.
    Certify {
        config: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Simulate the delayed or switched network and write a trajectory CSV.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// List the row-independent closure of a switched set with each member's spectral radius.
    Closure {
        config: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Write a certificate, comparison table and trajectories into a directory.
    Report {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Print a bundled example configuration.
    Example {
        /// One of the bundled names; omit to list them.
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Tuning {
    /// Verdict tolerance around 1.
    #[arg(long)]
    tol: Option<f64>,
    /// Power-method tolerance.
    #[arg(long)]
    power_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Delay bound L used for the convergence rate.
    #[arg(long = "L", alias = "delay-bound")]
    delay_bound: Option<usize>,
}

impl Tuning {
    fn overrides(&self) -> Overrides {
        Overrides {
            certificate_tol: self.tol,
            power_tol: self.power_tol,
            max_iter: self.max_iter,
            delay_bound: self.delay_bound,
            ..Overrides::default()
        }
    }
}

fn scenario(path: &Path, o: &Overrides) -> Result<Scenario, CliError> {
    let (src, config) = load(path)?;
    build(&src, &config, o)
}

fn run(cli: Cli) -> Result<Option<Verdict>, CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Certify { config, tuning } => {
            let s = scenario(&config, &tuning.overrides())?;
            commands::certify_cmd(&s, &mut out).map(Some)
        }
        Command::Simulate { config, steps, seed, out: csv } => {
            let s = scenario(&config, &Overrides { steps, seed, ..Overrides::default() })?;
            commands::simulate_cmd(&s, &csv, &mut out).map(|_| None)
        }
        Command::Closure { config, tuning } => {
            let s = scenario(&config, &tuning.overrides())?;
            commands::closure_cmd(&s, &mut out).map(|_| None)
        }
        Command::Report { config, out: dir, seed, tuning } => {
            let s = scenario(&config, &Overrides { seed, ..tuning.overrides() })?;
            commands::report_cmd(&s, &dir, &mut out).map(Some)
        }
        Command::Example { name: None, .. } => {
            for name in EXAMPLE_NAMES {
                writeln!(out, "{name}").map_err(|e| CliError::io("<stdout>", e))?;
            }
            Ok(None)
        }
        Command::Example { name: Some(name), out: path } => {
            let config = example(&name).ok_or_else(|| CliError::Config {
                path: PathBuf::from(&name),
                line: None,
                message: format!("unknown example; choose one of {}", EXAMPLE_NAMES.join(", ")),
            })?;
            let text = config.to_toml();
            match path {
                Some(p) => std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?,
                None => out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?,
            }
            Ok(None)
        }
    }
}

fn main() -> ExitCode {
    let outcome = run(Cli::parse());
    if let Err(e) = &outcome {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&outcome))
}
