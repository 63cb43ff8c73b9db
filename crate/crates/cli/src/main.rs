use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use saom_cli::{run, Command, Context, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "saom", version, about = "Simulate and estimate stochastic actor-oriented network models")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// INI run configuration
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides [estimation] seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides [output] dir)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Accepted for compatibility; computation is single-threaded
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Simulate panels forward from the first observed wave
    Simulate,
    /// Method-of-moments estimation
    EstimateMom,
    /// Maximum-likelihood estimation by data augmentation
    EstimateMl,
    /// Path-sampling likelihood-ratio test of [parameters] against [lrtest]
    Lrtest,
    /// Exact log-likelihood at [parameters] (n <= 4)
    ExactLoglik,
    /// Re-run the convergence check on a saved result
    Diagnose {
        /// Saved result JSON (overrides [output] result)
        #[arg(long, value_name = "PATH")]
        result: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides =
        Overrides { seed: cli.seed, out: cli.out, threads: cli.threads, verbose: cli.verbose, result: None };
    let command = match cli.command {
        Sub::Simulate => Command::Simulate,
        Sub::EstimateMom => Command::EstimateMom,
        Sub::EstimateMl => Command::EstimateMl,
        Sub::Lrtest => Command::LrTest,
        Sub::ExactLoglik => Command::ExactLoglik,
        Sub::Diagnose { result } => {
            overrides.result = result;
            Command::Diagnose
        }
    };
    let Some(path) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    let outcome = RunConfig::load(&path).and_then(|cfg| {
        let ctx = Context::new(cfg, &overrides)?;
        run(command, &ctx)
    });
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let saom_cli::CliError::NotConverged { report, .. } = &e {
                print!("{report}");
            }
            eprintln!("error: {e}");
            eprintln!("hint: {}", e.hint());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
