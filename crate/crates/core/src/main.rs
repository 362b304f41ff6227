use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kernel_misspec::harness::{self, ExperimentConfig, ExperimentKind};
use kernel_misspec::Error;

#[derive(Parser)]
#[command(
    name = "kmisspec",
    version,
    about = "Run and report misspecified kernel optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Write the eigenvalue sequence of a kernel.
    Spectrum(RunArgs),
    /// Effective dimension, both bounds and the grid estimate over a τ grid.
    Lebesgue(RunArgs),
    /// Offline misspecification amplification over ε and n.
    Offline(RunArgs),
    /// Domain-splitting GP-UCB regret over seeds.
    Online(RunArgs),
    /// Domain splitting against the single-region baseline.
    Compare(RunArgs),
    /// Check a finished run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(args: &RunArgs, kind: ExperimentKind) -> Result<(), Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    match cfg.kind {
        Some(k) if k != kind => {
            return Err(Error::Config(format!(
                "config kind `{}` does not match subcommand `{}`",
                k.name(),
                kind.name()
            )))
        }
        _ => cfg.kind = Some(kind),
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let m = harness::run_experiment(
        &cfg,
        &harness::config_dir(&args.config),
        &args.out,
        args.jobs,
    )?;
    println!(
        "{} run written to {} ({} files, {:.2}s)",
        kind.name(),
        args.out.display(),
        m.files.len(),
        m.wall_time_s
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => run(a, ExperimentKind::Spectrum),
        Command::Lebesgue(a) => run(a, ExperimentKind::LebesgueScan),
        Command::Offline(a) => run(a, ExperimentKind::OfflineAmplification),
        Command::Online(a) => run(a, ExperimentKind::OnlineRegret),
        Command::Compare(a) => run(a, ExperimentKind::BaselineCompare),
        Command::Report { out } => match harness::report(out) {
            Ok(r) => {
                print!("{r}");
                return if r.all_pass() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                };
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
