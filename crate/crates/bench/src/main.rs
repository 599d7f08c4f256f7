use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use score_bench::sweep::{lower_bound, sweep, write_sweep_csv, Axis};
use score_bench::verify::{verify, VerifyOptions};
use score_bench::{run, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "score-bench",
    version,
    about = "Online k-subset selection experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and print its summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<usize>,
        /// Directory for per-replica CSVs and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the brute-force oracle suite.
    Verify {
        #[arg(long, default_value_t = 12)]
        max_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-run an experiment over values of one parameter; prints CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of T, k, noise_l2, epsilon, cost.
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Mean augmented regret against the one-hot ensemble.
    LowerBound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long = "T", alias = "horizon")]
        horizon: usize,
        #[arg(long, default_value_t = 200)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            replicas,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = replicas {
                cfg.replicas = r;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let summary = run(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            let mut ok = true;
            for b in summary
                .bounds
                .iter()
                .filter(|b| b.mean_ratio.is_nan() || b.mean_ratio > 1.0)
            {
                eprintln!(
                    "bound {} exceeded: mean {} is {:.3} x the bound",
                    b.name, b.measure, b.mean_ratio
                );
                ok = false;
            }
            Ok(ok)
        }
        Command::Verify { max_n, seed } => {
            let report = verify(&VerifyOptions {
                max_n,
                seed,
                ..VerifyOptions::default()
            });
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                println!(
                    "{status} {:<20} {:>6} cases  {}",
                    c.name, c.cases, c.invariant
                );
                if let Some(d) = &c.detail {
                    println!("     {d}");
                }
            }
            println!("{:.2} s", report.seconds);
            Ok(report.passed())
        }
        Command::Sweep {
            config,
            axis,
            values,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let points = sweep(&cfg, axis, &values)?;
            if let Some(dir) = &cfg.output {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("sweep_{}.csv", axis.name()));
                let file = std::fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                write_sweep_csv(axis, &points, file)?;
            }
            write_sweep_csv(axis, &points, std::io::stdout().lock())?;
            Ok(true)
        }
        Command::LowerBound {
            n,
            k,
            horizon,
            replicas,
            seed,
        } => {
            let report = lower_bound(n, k, horizon, replicas, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.consistent)
        }
    }
}
