//! Thin CLI over the experiment harness: one subcommand per suite, flags
//! overriding the JSON config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dbs_rl::harness::{run_experiment, sparkline, ExperimentConfig, Suite};

#[derive(Parser)]
#[command(
    name = "dbs-lab",
    about = "Seeded experiment suites for dynamic-softmax value estimation",
    version
)]
struct Cli {
    #[command(subcommand)]
    suite: SuiteCommand,
}

#[derive(Subcommand)]
enum SuiteCommand {
    /// Value-iteration loss curves for a set of summary operators.
    Vi(CommonArgs),
    /// Tabular Q-learning variants on the GridWorld.
    Qlearn(CommonArgs),
    /// Monte Carlo overestimation-bias bench.
    Bias(CommonArgs),
    /// Closed-form bound and step-count tables.
    Bounds(CommonArgs),
    /// Desk-scale DQN with a meta-adapted temperature coefficient.
    Dqn(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Output directory for CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for seed-level parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Overwrite existing artifacts.
    #[arg(long)]
    force: bool,
    /// GridWorld map file (vi / qlearn suites).
    #[arg(long)]
    map: Option<PathBuf>,
    /// Sweeps (vi suite).
    #[arg(long)]
    iterations: Option<usize>,
    /// Episodes (qlearn / dqn suites).
    #[arg(long)]
    episodes: Option<usize>,
    /// Monte Carlo trials (bias suite).
    #[arg(long)]
    trials: Option<usize>,
    /// Print a sparkline per artifact summary line.
    #[arg(long)]
    sparkline: bool,
}

fn build_config(suite: Suite, args: &CommonArgs) -> Result<ExperimentConfig, String> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    config.suite = suite;
    if let Some(seeds) = &args.seed {
        config.seeds = seeds.clone();
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if args.force {
        config.force = true;
    }
    if let Some(map) = &args.map {
        config.map = Some(map.clone());
    }
    if let Some(iterations) = args.iterations {
        config.vi.iterations = iterations;
    }
    if let Some(episodes) = args.episodes {
        config.qlearn.episodes = episodes;
        config.dqn.episodes = episodes;
    }
    if let Some(trials) = args.trials {
        config.bias.trials = trials;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, args) = match &cli.suite {
        SuiteCommand::Vi(a) => (Suite::Vi, a),
        SuiteCommand::Qlearn(a) => (Suite::Qlearn, a),
        SuiteCommand::Bias(a) => (Suite::Bias, a),
        SuiteCommand::Bounds(a) => (Suite::Bounds, a),
        SuiteCommand::Dqn(a) => (Suite::Dqn, a),
    };
    let config = match build_config(suite, args) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::FAILURE;
        }
    };
    match run_experiment(&config) {
        Ok(record) => {
            for line in &record.summary {
                println!("{line}");
            }
            if args.sparkline {
                print_sparklines(&record.artifacts);
            }
            println!(
                "wrote {} artifacts to {} in {:.2?} (config {})",
                record.artifacts.len(),
                config.out_dir.display(),
                record.duration,
                &record.config_hash[..8]
            );
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}

/// Log-scaled sparkline of the numeric last column of each CSV artifact.
fn print_sparklines(paths: &[PathBuf]) {
    for path in paths {
        if path.extension().map(|e| e != "csv").unwrap_or(true) {
            continue;
        }
        let Ok(text) = std::fs::read_to_string(path) else {
            continue;
        };
        let values: Vec<f64> = text
            .lines()
            .skip(1)
            .filter_map(|line| line.rsplit(',').next()?.parse::<f64>().ok())
            .map(|v| if v > 0.0 { v.log10() } else { -16.0 })
            .collect();
        if values.len() >= 2 {
            let name = path.file_name().unwrap_or_default().to_string_lossy();
            println!("{name}: {}", sparkline(&values));
        }
    }
}
