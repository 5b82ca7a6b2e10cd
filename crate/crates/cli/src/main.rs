//! `pbg-spdc`: photon-pair generation in nonlinear photonic-band-gap stacks.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Run;
use crate::error::CliError;
use crate::output::Sink;

#[derive(Parser)]
#[command(
    name = "pbg-spdc",
    version,
    about = "Spontaneous parametric down-conversion in layered nonlinear stacks"
)]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, env = "PBG_SPDC_WORKERS")]
    workers: Option<usize>,

    /// Output directory; overrides `output_dir` of the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Omit the provenance comment line from CSV files.
    #[arg(long, global = true)]
    no_metadata: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// TE and TM transmittance/reflectance versus wavelength for each angle.
    Transmission { config: PathBuf },
    /// Joint spectral amplitudes as binary grids plus a marginal summary.
    Jsa { config: PathBuf },
    /// Signal energy spectra per channel.
    Spectrum { config: PathBuf },
    /// Two-photon temporal probability maps.
    TimeMap { config: PathBuf },
    /// Signal photon flux versus time (gaussian pump).
    Flux { config: PathBuf },
    /// Hong-Ou-Mandel coincidence rate versus delay.
    Hom {
        config: PathBuf,
        /// Central fraction of the delay grid searched for the dip.
        #[arg(long)]
        dip_window: Option<f64>,
    },
    /// Pair-generation efficiency relative to a phase-matched bulk reference.
    Efficiency { config: PathBuf },
    /// Load the config and stack and print a summary.
    Validate { config: PathBuf },
}

impl Command {
    fn config(&self) -> &PathBuf {
        match self {
            Command::Transmission { config }
            | Command::Jsa { config }
            | Command::Spectrum { config }
            | Command::TimeMap { config }
            | Command::Flux { config }
            | Command::Hom { config, .. }
            | Command::Efficiency { config }
            | Command::Validate { config } => config,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let run = Run::load(cli.command.config(), cli.out.as_deref())?;
    if let Command::Validate { .. } = cli.command {
        return commands::validate(&run);
    }
    let metadata = (!cli.no_metadata).then(|| run.metadata());
    let mut sink = Sink::new(run.output_dir.clone(), metadata)?;
    match &cli.command {
        Command::Transmission { .. } => commands::transmission(&run, &mut sink)?,
        Command::Jsa { .. } => commands::jsa_files(&run, &mut sink)?,
        Command::Spectrum { .. } => commands::spectrum(&run, &mut sink)?,
        Command::TimeMap { .. } => commands::time_map(&run, &mut sink)?,
        Command::Flux { .. } => commands::flux(&run, &mut sink)?,
        Command::Hom { dip_window, .. } => {
            let window = dip_window.unwrap_or(run.config.hom.window);
            if !(window > 0.0 && window <= 1.0) {
                return Err(CliError::Config(format!(
                    "dip window {window} outside (0, 1]"
                )));
            }
            commands::hom(&run, &mut sink, window)?
        }
        Command::Efficiency { .. } => commands::efficiency(&run, &mut sink)?,
        Command::Validate { .. } => unreachable!(),
    }
    for path in sink.written() {
        println!("{}", path.display());
    }
    Ok(())
}
