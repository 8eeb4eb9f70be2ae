use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use commands::Run;
use config::{NumberOrName, OmegaChoice, RunConfig, TimesConfig};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "pmsqm",
    version,
    about = "Variational oscillator-basis spectra and dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; defaults to the slow-roll double well.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Comma-separated basis sizes, e.g. 6,8,10.
    #[arg(long, global = true)]
    n_basis: Option<String>,

    /// pms, pms-numeric or a fixed frequency.
    #[arg(long, global = true)]
    omega: Option<String>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Sample times as START:STOP:STEP.
    #[arg(long, global = true)]
    times: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Energies for each basis size.
    Spectrum,
    /// <x^2>(t) of the initial Gaussian, one CSV per basis size.
    Evolve,
    /// T_N / N over a frequency grid.
    PmsScan,
    /// Cross-check against the grid oracle.
    Validate,
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("--n-basis: cannot parse '{s}'")))
        })
        .collect()
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(sizes) = &cli.n_basis {
        config.basis.n_basis = parse_sizes(sizes)?;
    }
    if let Some(omega) = &cli.omega {
        OmegaChoice::parse(omega)?;
        config.basis.omega = NumberOrName::Name(omega.clone());
    }
    if let Some(out) = &cli.out {
        config.output.dir = out.clone();
    }
    if let Some(times) = &cli.times {
        config.evolution.times = TimesConfig::parse(times)?;
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let run = Run::new(load_config(cli)?)?;
    let written = match cli.command {
        Command::Spectrum => commands::spectrum(&run)?,
        Command::Evolve => commands::evolve(&run)?,
        Command::PmsScan => commands::pms_scan(&run)?,
        Command::Validate => {
            let (checks, written) = commands::validate(&run)?;
            for c in &checks {
                println!(
                    "[{}] {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            for path in &written {
                println!("{}", path.display());
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            return if failed == 0 {
                Ok(())
            } else {
                Err(CliError::ChecksFailed(failed))
            };
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
