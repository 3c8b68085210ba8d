use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tva_core::experiments::DEFAULT_TRAIN_FRACTION;
use tva_core::workflow::WorkflowConfig;
use tva_core::Execution;

mod config;
mod error;
mod generate;
mod monitor;
mod replicate;
mod svg;

use config::{pick, FileConfig};
use error::{CliError, CliResult};
use replicate::{ReplicateArgs, TraceSource};

#[derive(Parser)]
#[command(name = "tva", version, about = "Tactic volatility aware forecasting and adaptation toolkit")]
struct Cli {
    /// JSON file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (default 42).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emulate a download/energy trace and write it as CSV.
    Generate {
        /// Simulated duration in minutes.
        #[arg(long)]
        minutes: Option<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the four replication experiments and write report CSVs.
    Replicate(ReplicateFlags),
    /// Run the monitoring loop over a recorded history, one JSON line per tick.
    Monitor(MonitorFlags),
}

#[derive(Args)]
struct ReplicateFlags {
    /// Recorded trace CSV to evaluate on.
    #[arg(long, conflicts_with = "emulate")]
    trace: Option<PathBuf>,
    /// Emulate a trace instead of reading one.
    #[arg(long)]
    emulate: bool,
    /// Emulated duration in minutes.
    #[arg(long)]
    minutes: Option<u32>,
    /// Experiments per research question.
    #[arg(long)]
    runs: Option<usize>,
    /// Latency samples per tactic for the two-tactic simulation.
    #[arg(long)]
    rq1_samples: Option<usize>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also render SVG scatter plots.
    #[arg(long)]
    svg: bool,
    /// Run experiments on a single thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct MonitorFlags {
    /// SLA spec JSON (one object or an array).
    #[arg(long)]
    spec: PathBuf,
    /// Wide CSV with one column per spec.
    #[arg(long)]
    history: PathBuf,
    /// Trace used to train the tactic predictors; emulated when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    minutes: Option<u32>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    risk_margin: Option<f64>,
    #[arg(long)]
    tick_seconds: Option<f64>,
    /// Sliding history window in ticks.
    #[arg(long)]
    window: Option<usize>,
    /// Refit the forecaster every N ticks (0 = fit once).
    #[arg(long)]
    refit_every: Option<usize>,
    /// Write JSON lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn check_runs(runs: usize) -> CliResult<usize> {
    if runs < 1 {
        return Err(CliError::Validation("runs must be at least 1".into()));
    }
    Ok(runs)
}

fn check_fraction(f: f64) -> CliResult<f64> {
    if !(f > 0.0 && f < 1.0) {
        return Err(CliError::Validation(format!("train fraction must lie in (0, 1), got {f}")));
    }
    Ok(f)
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = pick(cli.seed, file.seed, config::DEFAULT_SEED);
    match cli.command {
        Command::Generate { minutes, out } => {
            generate::run(pick(minutes, file.minutes, config::DEFAULT_MINUTES), seed, &out)
        }
        Command::Replicate(f) => {
            let source = match (f.trace, f.emulate) {
                (Some(p), _) => TraceSource::File(p),
                (None, true) => TraceSource::Emulate {
                    minutes: pick(f.minutes, file.minutes, config::DEFAULT_MINUTES),
                },
                (None, false) => return Err(CliError::Usage("replicate needs --trace <FILE> or --emulate".into())),
            };
            let args = ReplicateArgs {
                source,
                runs: check_runs(pick(f.runs, file.runs, config::DEFAULT_RUNS))?,
                rq1_samples: check_runs(pick(f.rq1_samples, file.rq1_samples, config::DEFAULT_RQ1_SAMPLES))?,
                seed,
                train_fraction: check_fraction(pick(f.train_fraction, file.train_fraction, DEFAULT_TRAIN_FRACTION))?,
                out_dir: f.out_dir,
                svg: f.svg,
                execution: if f.sequential { Execution::Sequential } else { Execution::Parallel },
            };
            replicate::run(&args)
        }
        Command::Monitor(f) => {
            let defaults = WorkflowConfig::default();
            let workflow = WorkflowConfig {
                horizon: pick(f.horizon, file.horizon, defaults.horizon),
                risk_margin: pick(f.risk_margin, file.risk_margin, defaults.risk_margin),
                tick_seconds: pick(f.tick_seconds, file.tick_seconds, defaults.tick_seconds),
                utility: file.utility.unwrap_or(defaults.utility),
                ..defaults
            };
            let args = monitor::MonitorArgs {
                workflow,
                window: pick(f.window, file.window, config::DEFAULT_WINDOW),
                refit_every: pick(f.refit_every, file.refit_every, config::DEFAULT_REFIT_EVERY),
            };
            let specs = monitor::load_specs(&f.spec)?;
            let history = monitor::load_history(&f.history)?;
            let source = match f.trace {
                Some(p) => TraceSource::File(p),
                None => TraceSource::Emulate {
                    minutes: pick(f.minutes, file.minutes, config::DEFAULT_MINUTES),
                },
            };
            let trace = replicate::load_trace(&source, seed)?;
            match f.out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
                    monitor::run(&args, &specs, history, &trace, &mut BufWriter::new(file))
                }
                None => monitor::run(&args, &specs, history, &trace, &mut std::io::stdout().lock()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tva: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
