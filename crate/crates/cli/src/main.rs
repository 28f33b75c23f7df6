use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uquant::harness::{self, ExperimentConfig, Outputs};
use uquant::Error;

#[derive(Parser)]
#[command(
    name = "uquant",
    version,
    about = "Deterministic dyadic quantization and rate verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize the configured measure at every budget.
    Quantize(Common),
    /// Quantize and evaluate the error at every budget.
    Eval(Common),
    /// Rate sweep with fitted and theoretical slopes.
    Sweep(Common),
    /// Exact one-dimensional optimal errors.
    Oracle(Common),
    /// Deterministic clouds against i.i.d. samples.
    CompareRandom(Common),
    /// Rearrangement lower bounds against the exact optimum.
    LowerBound(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn load(&self) -> uquant::Result<ExperimentConfig> {
        if let Some(k) = self.jobs {
            if k == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
        }
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(dir) = &self.out {
            cfg.output.dir = Some(dir.clone());
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn slope(s: Option<f64>) -> String {
    s.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

fn run(cmd: Command) -> uquant::Result<Outputs> {
    Ok(match cmd {
        Command::Quantize(c) => harness::run_quantize(&c.load()?)?.1,
        Command::Eval(c) => harness::run_eval(&c.load()?)?.1,
        Command::Sweep(c) => {
            let (r, out) = harness::run_sweep(&c.load()?)?;
            println!(
                "regime {} fitted {} theory {:.4}{}",
                r.regime,
                slope(r.fitted_slope),
                r.theory_slope,
                if r.critical {
                    format!(" deflated {}", slope(r.deflated_slope))
                } else {
                    String::new()
                }
            );
            out
        }
        Command::Oracle(c) => harness::run_oracle(&c.load()?)?.1,
        Command::CompareRandom(c) => {
            let (r, out) = harness::run_compare_random(&c.load()?)?;
            println!(
                "deterministic {} random {}",
                slope(r.deterministic_slope),
                slope(r.random_slope)
            );
            out
        }
        Command::LowerBound(c) => {
            let (r, out) = harness::run_lower_bound(&c.load()?)?;
            println!(
                "violations {} scaled oracle slope {}",
                r.violations,
                slope(r.scaled_oracle_slope)
            );
            out
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(out) => {
            for f in out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
