use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};

use gmcap_cli::config::parse_config;
use gmcap_cli::runner::{run_experiment, Subcommand};

/// Simulate time-varying MIMO Rayleigh fading channels with a Gauss-Markov
/// gain process, estimate and maximize their ergodic capacity, and verify
/// the information-density, tail-bound, and matrix-inequality machinery
/// behind those numbers.
#[derive(Parser)]
#[command(name = "gmcap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Monte Carlo capacity objective at the isotropic input covariance.
    Capacity(RunArgs),
    /// Maximize the capacity objective over trace-constrained covariances.
    Optimize(RunArgs),
    /// Normalized information density: mean, variance decay, lag covariance.
    Infodensity(RunArgs),
    /// Chernoff power-tail bound against its Monte Carlo exceedance rate.
    Bounds(RunArgs),
    /// Random-coding error rates under threshold decoding.
    Coding(RunArgs),
    /// Randomized matrix-inequality and geometric-sum checks.
    Lemmas(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to a `key = value` experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count override; GMCAP_THREADS applies when absent.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, args) = match &cli.command {
        Command::Capacity(a) => (Subcommand::Capacity, a),
        Command::Optimize(a) => (Subcommand::Optimize, a),
        Command::Infodensity(a) => (Subcommand::Infodensity, a),
        Command::Bounds(a) => (Subcommand::Bounds, a),
        Command::Coding(a) => (Subcommand::Coding, a),
        Command::Lemmas(a) => (Subcommand::Lemmas, a),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("gmcap: cannot read {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("gmcap: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    } else if cfg.threads.is_none() {
        if let Ok(v) = std::env::var("GMCAP_THREADS") {
            match v.parse::<usize>() {
                Ok(n) if n >= 1 => cfg.threads = Some(n),
                _ => {
                    eprintln!("gmcap: GMCAP_THREADS must be a positive integer, got `{v}`");
                    return ExitCode::from(2);
                }
            }
        }
    }

    match run_experiment(sub, &cfg) {
        Ok(summary) => {
            for file in &summary.files {
                println!("wrote {}", file.display());
            }
            if summary.failures > 0 {
                eprintln!("gmcap: {} check(s) failed", summary.failures);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("gmcap: {sub} failed: {e}");
            ExitCode::from(2)
        }
    }
}
