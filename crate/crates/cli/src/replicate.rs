use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tva_core::experiments::{
    format_sig17, run_forecast_experiments, run_predictor_experiments, summarize, write_reports_csv,
    ExperimentConfig, ExperimentReport, Summary, MODEL_ARIMA, MODEL_BASELINE_MEAN, MODEL_BASELINE_STATIC,
    MODEL_BRR, MODEL_MRA, MODEL_PERSISTENCE,
};
use tva_core::valet::{
    generate_trace, ingest_trace_csv, legacy_download_tactic, run_rq1_simulation, to_idle_series,
    to_regression_dataset, Rq1Result, TacticProfile, TraceRecord, VolatilityConfig, IDLE_INTERVAL_SECONDS,
};
use tva_core::Execution;

use crate::error::{CliError, CliResult};
use crate::svg::{scatter, Series};

/// Share of experiment runs that must succeed for a zero exit code.
pub const MIN_SUCCESS_RATE: f64 = 0.9;

pub enum TraceSource {
    File(PathBuf),
    Emulate { minutes: u32 },
}

pub struct ReplicateArgs {
    pub source: TraceSource,
    pub runs: usize,
    pub rq1_samples: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub out_dir: PathBuf,
    pub svg: bool,
    pub execution: Execution,
}

pub fn load_trace(source: &TraceSource, seed: u64) -> CliResult<Vec<TraceRecord>> {
    Ok(match source {
        TraceSource::File(p) => ingest_trace_csv(p)?,
        TraceSource::Emulate { minutes } => generate_trace(*minutes, seed, &VolatilityConfig::default())?,
    })
}

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((path, BufWriter::new(file)))
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let (path, mut w) = create(dir, name)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

fn write_rq1(dir: &Path, r: &Rq1Result) -> CliResult<()> {
    write_file(dir, "rq1.csv", |w| {
        writeln!(w, "sample,latency_a,cost_a,latency_b,cost_b")?;
        for i in 0..r.costs_a.len() {
            writeln!(
                w,
                "{i},{},{},{},{}",
                format_sig17(r.latencies_a[i]),
                format_sig17(r.costs_a[i]),
                format_sig17(r.latencies_b[i]),
                format_sig17(r.costs_b[i])
            )?;
        }
        Ok(())
    })?;
    write_file(dir, "rq1_histogram.csv", |w| {
        writeln!(w, "bin_start,bin_end,count_a,count_b")?;
        for b in &r.histogram {
            writeln!(w, "{},{},{},{}", format_sig17(b.start), format_sig17(b.end), b.count_a, b.count_b)?;
        }
        Ok(())
    })
}

fn keep(reports: Vec<ExperimentReport>, models: &[&str]) -> Vec<ExperimentReport> {
    reports.into_iter().filter(|r| models.contains(&r.model_name.as_str())).collect()
}

/// Sample standard deviation and the nearest-rank 99th percentile.
pub fn spread(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.99 * n).ceil() as usize).clamp(1, sorted.len());
    (sd, sorted[rank - 1])
}

fn print_summary(label: &str, s: &Summary) {
    println!("[{label}]");
    println!("{:<16} {:>6} {:>6} {:>14} {:>14}", "model", "ok", "failed", "mean_rmse", "mean_mae");
    for m in &s.models {
        println!(
            "{:<16} {:>6} {:>6} {:>14.6} {:>14.6}",
            m.model, m.runs_ok, m.runs_failed, m.mean_rmse, m.mean_mae
        );
    }
    for w in &s.wins {
        println!("wins {} over {}: {}/{}", w.model, w.other, w.wins, w.compared);
    }
}

fn rmse_series<'a>(reports: &[ExperimentReport], models: &[&'a str]) -> Vec<Series<'a>> {
    models
        .iter()
        .map(|m| Series {
            label: m,
            points: reports
                .iter()
                .filter(|r| r.model_name == *m)
                .filter_map(|r| r.scores.map(|s| (r.run_index as f64, s.rmse)))
                .collect(),
        })
        .collect()
}

fn write_svg(dir: &Path, name: &str, svg: String) -> CliResult<()> {
    write_file(dir, name, |w| w.write_all(svg.as_bytes()))
}

pub fn run(args: &ReplicateArgs) -> CliResult<()> {
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let trace = load_trace(&args.source, args.seed)?;
    let cfg = ExperimentConfig::new(args.runs, args.seed)
        .with_train_fraction(args.train_fraction)
        .with_execution(args.execution);

    let rq1 = run_rq1_simulation(&TacticProfile::table_a(), &TacticProfile::table_b(), args.rq1_samples, args.seed)?;
    write_rq1(&args.out_dir, &rq1)?;

    let idle = to_idle_series(&trace, IDLE_INTERVAL_SECONDS)?;
    let rq2 = run_forecast_experiments(&idle, &cfg)?;

    let ds = to_regression_dataset(&trace)?;
    let tactic = legacy_download_tactic();
    let rq3 = keep(
        run_predictor_experiments(&ds.design, &ds.cost, tactic.static_cost, &cfg)?,
        &[MODEL_MRA, MODEL_BRR],
    );
    let rq4 = keep(
        run_predictor_experiments(&ds.design, &ds.latency, tactic.static_latency, &cfg)?,
        &[MODEL_MRA, MODEL_BASELINE_MEAN, MODEL_BASELINE_STATIC],
    );
    for (name, reports) in [("rq2.csv", &rq2), ("rq3.csv", &rq3), ("rq4.csv", &rq4)] {
        write_file(&args.out_dir, name, |w| write_reports_csv(w, reports))?;
    }

    let (sd_a, p99_a) = spread(&rq1.costs_a);
    let (sd_b, p99_b) = spread(&rq1.costs_b);
    println!("[rq1]");
    println!("samples={} sd_a={sd_a:.6} sd_b={sd_b:.6} p99_a={p99_a:.6} p99_b={p99_b:.6}", rq1.costs_a.len());
    let summaries = [
        ("rq2", summarize(&rq2)?),
        ("rq3", summarize(&rq3)?),
        ("rq4", summarize(&rq4)?),
    ];
    for (label, s) in &summaries {
        print_summary(label, s);
    }

    if args.svg {
        let hist = |count: fn(&tva_core::valet::HistogramBin) -> usize| {
            rq1.histogram
                .iter()
                .map(|b| ((b.start + b.end) / 2.0, count(b) as f64))
                .collect::<Vec<_>>()
        };
        write_svg(
            &args.out_dir,
            "rq1.svg",
            scatter(
                "Overall cost distribution",
                "overall cost",
                "count",
                &[
                    Series { label: "tactic A", points: hist(|b| b.count_a) },
                    Series { label: "tactic B", points: hist(|b| b.count_b) },
                ],
            ),
        )?;
        for (name, title, reports, models) in [
            ("rq2.svg", "Idle energy forecast RMSE", &rq2, vec![MODEL_ARIMA, MODEL_PERSISTENCE]),
            ("rq3.svg", "Download energy prediction RMSE", &rq3, vec![MODEL_MRA, MODEL_BRR]),
            ("rq4.svg", "Download latency prediction RMSE", &rq4, vec![MODEL_MRA, MODEL_BASELINE_MEAN, MODEL_BASELINE_STATIC]),
        ] {
            write_svg(&args.out_dir, name, scatter(title, "run", "rmse", &rmse_series(reports, &models)))?;
        }
    }

    let total: usize = summaries.iter().map(|(_, s)| s.total_runs()).sum();
    let failed: usize = summaries.iter().map(|(_, s)| s.failed_runs()).sum();
    let ok_rate = (total - failed) as f64 / total as f64;
    if ok_rate < MIN_SUCCESS_RATE {
        return Err(CliError::Validation(format!(
            "{failed} of {total} experiment runs failed"
        )));
    }
    if failed > 0 {
        eprintln!("warning: {failed} of {total} experiment runs failed");
    }
    Ok(())
}
