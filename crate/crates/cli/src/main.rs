use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod output;

use config::RunConfig;
use output::Output;

#[derive(Parser)]
#[command(
    name = "spectra-asym",
    version,
    about = "Eigenvalue asymptotics, shooting and inverse recovery for polynomial Schrödinger operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file (default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for spectrum scans.
    #[arg(long, global = true, env = "SPECTRA_ASYM_JOBS")]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Coefficients d, b, K (closed form and quadrature), e and eta.
    Coeffs,
    /// lambda_(n,0), asymptotic, refined and shooting eigenvalues.
    Spectrum,
    /// Counting function against the computed spectrum.
    Count,
    /// Recover potential coefficients from eigenvalues.
    Invert,
    /// Run the consistency suite; exits with status 1 on any failure.
    Verify,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn run(cli: &Cli) -> Result<bool> {
    let path = cli.config.as_ref().context("--config is required")?;
    let cfg = RunConfig::load(path)?;
    let (out, ok) = match cli.command {
        Command::Coeffs => (commands::coeffs(&cfg)?, true),
        Command::Spectrum => (commands::spectrum(&cfg)?, true),
        Command::Count => (commands::count(&cfg)?, true),
        Command::Invert => (commands::invert(&cfg)?, true),
        Command::Verify => commands::verify(&cfg)?,
    };
    emit(cli, &out)?;
    Ok(ok)
}

fn emit(cli: &Cli, out: &Output) -> Result<()> {
    let mut w: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.format {
        Format::Csv => {
            out.write_csv(&mut w)?;
            for (k, v) in &out.extra {
                eprintln!("{k}: {v}");
            }
        }
        Format::Json => out.write_json(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(anyhow::Error::from)
            .and_then(|pool| pool.install(|| run(&cli))),
        None => run(&cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
