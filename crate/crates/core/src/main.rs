use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dpinfer::error::DpError;
use dpinfer::inference::AbSided;
use dpinfer::propagation::SmoothingConfig;
use dpinfer::report::{self, EstimateOptions, InputFormat};
use dpinfer::simlab;

/// Inference on the demographic parity (min-over-max) metric.
#[derive(Parser)]
#[command(name = "dpinfer", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate DP with a confidence interval from a CSV file.
    Estimate {
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// One-sided test of DP against the EEOC 0.8 threshold.
    TestEeoc {
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Compare DP between two datasets (A/B test).
    AbTest {
        file_a: PathBuf,
        file_b: PathBuf,
        /// two-sided, or one-sided for DP_B > DP_A
        #[arg(long, value_enum, default_value_t = Sided::Two)]
        sided: Sided,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// K-fold cross-fitted DP from a unit-level CSV.
    Crossfit {
        file: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Censored-model MLE pipeline from a group,applications,hired CSV.
    Mle {
        file: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run a Monte Carlo scenario from a JSON file.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// also write the first variant's histogram as CSV to this path
        #[arg(long)]
        histogram_csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Sided {
    Two,
    One,
}

#[derive(Args)]
struct CommonOpts {
    /// input rows are one unit per line (group,outcome)
    #[arg(long, conflicts_with = "aggregate")]
    unit: bool,
    /// input rows are per-group counts (group,successes,trials)
    #[arg(long)]
    aggregate: bool,
    /// fixed smoothing sharpness
    #[arg(long, conflicts_with = "alpha_rule")]
    alpha: Option<f64>,
    /// sharpness rule c,q giving alpha = c * N^q (q < 1/2)
    #[arg(long, value_name = "C,Q")]
    alpha_rule: Option<String>,
    /// confidence level
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// use the exact min/max instead of the smooth extremes
    #[arg(long)]
    raw: bool,
    /// adjust boundary rates to (x+0.5)/(n+1) for variance only
    #[arg(long)]
    continuity_correction: bool,
}

impl CommonOpts {
    fn to_options(&self) -> Result<EstimateOptions, DpError> {
        let format = if self.unit {
            InputFormat::Unit
        } else {
            InputFormat::Aggregate
        };
        let smoothing = if let Some(a) = self.alpha {
            SmoothingConfig::Fixed(a)
        } else if let Some(rule) = &self.alpha_rule {
            let parts: Vec<&str> = rule.split(',').collect();
            if parts.len() != 2 {
                return Err(DpError::InvalidInput(format!(
                    "--alpha-rule expects c,q, got {rule:?}"
                )));
            }
            let c: f64 = parts[0].trim().parse().map_err(|_| {
                DpError::InvalidInput(format!("bad rule constant {:?}", parts[0]))
            })?;
            let q: f64 = parts[1].trim().parse().map_err(|_| {
                DpError::InvalidInput(format!("bad rule exponent {:?}", parts[1]))
            })?;
            SmoothingConfig::Rule { c, q }
        } else {
            SmoothingConfig::default()
        };
        smoothing.validate()?;
        Ok(EstimateOptions {
            format,
            smoothing,
            raw: self.raw,
            level: self.level,
            continuity_correction: self.continuity_correction,
        })
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("DPINFER_SEED").ok().and_then(|s| s.parse().ok())
}

fn run() -> Result<(), DpError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Estimate { file, opts } => {
            let report = report::run_estimate(&file, &opts.to_options()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::TestEeoc { file, opts } => {
            let report = report::run_test_eeoc(&file, &opts.to_options()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::AbTest {
            file_a,
            file_b,
            sided,
            opts,
        } => {
            let sided = match sided {
                Sided::Two => AbSided::Two,
                Sided::One => AbSided::OneBGtA,
            };
            let report = report::run_ab_test(&file_a, &file_b, sided, &opts.to_options()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Crossfit { file, k, seed } => {
            let seed = seed.or_else(env_seed).unwrap_or(0);
            let config = dpinfer::crossfit::CrossfitConfig { k, seed };
            let report = report::run_crossfit(&file, config)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Mle { file, opts } => {
            let report = report::run_mle(&file, &opts.to_options()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Simulate {
            scenario,
            seed,
            histogram_csv,
        } => {
            let text = std::fs::read_to_string(&scenario)?;
            let mut spec: simlab::ScenarioSpec = serde_json::from_str(&text)?;
            if let Some(s) = seed.or_else(env_seed) {
                spec.seed = s;
            }
            let summary = simlab::simulate(&spec)?;
            if let Some(path) = histogram_csv {
                let h = &summary.variants[0].histogram;
                let mut out = String::from("bin_left,bin_right,count\n");
                for (i, c) in h.counts.iter().enumerate() {
                    out.push_str(&format!("{},{},{}\n", h.edges[i], h.edges[i + 1], c));
                }
                std::fs::write(path, out)?;
            }
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                DpError::UndefinedDp(_) | DpError::InferenceUnavailable(_) => 3,
                DpError::TestUndefined(_) => 4,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
