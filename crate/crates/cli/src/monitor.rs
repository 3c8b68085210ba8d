use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tva_core::arima::MIN_DIFFERENCED_LEN;
use tva_core::types::validate_spec_set;
use tva_core::valet::{feature_vector, legacy_download_tactic, to_regression_dataset, Mirror, Phase, TraceRecord, FEATURE_NAMES, LAG_WINDOW};
use tva_core::workflow::{workflow_tick, ModelRegistry, SpecRecord, TacticModels, TickInputs, WorkflowConfig};
use tva_core::{fit_arima, fit_mra, ArimaOrder, SlaSpec, Tactic, TimeSeries};

use crate::error::{CliError, CliResult};

pub struct MonitorArgs {
    pub workflow: WorkflowConfig,
    pub window: usize,
    /// Refit forecasters every this many ticks; 0 fits once on the first window.
    pub refit_every: usize,
}

#[derive(Serialize)]
struct TickLine<'a> {
    tick: usize,
    specs: &'a [SpecRecord],
}

/// Reads a spec file holding one spec object or an array of them.
pub fn load_specs(path: &Path) -> CliResult<Vec<SlaSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |e: String| CliError::Validation(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let specs: Vec<SlaSpec> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|s| vec![s])
    }
    .map_err(|e| bad(e.to_string()))?;
    if specs.is_empty() {
        return Err(bad("no specs defined".into()));
    }
    for s in &specs {
        s.validate().map_err(|e| bad(e.to_string()))?;
    }
    validate_spec_set(&specs).map_err(|e| bad(e.to_string()))?;
    Ok(specs)
}

/// Reads a wide history CSV: one numeric column per spec, one row per tick.
/// A `timestamp` column, if present, is ignored.
pub fn load_history(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let bad = |line: u64, e: String| CliError::Validation(format!("{}: line {line}: {e}", path.display()));
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| bad(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let keep: Vec<usize> = (0..headers.len()).filter(|&i| headers[i] != "timestamp").collect();
    let mut columns = vec![Vec::new(); keep.len()];
    for row in reader.records() {
        let row = row.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line());
        for (c, &i) in keep.iter().enumerate() {
            let v: f64 = row[i]
                .trim()
                .parse()
                .map_err(|_| bad(line, format!("column '{}': invalid number '{}'", headers[i], &row[i])))?;
            if !v.is_finite() {
                return Err(bad(line, format!("column '{}': value must be finite", headers[i])));
            }
            columns[c].push(v);
        }
    }
    Ok((keep.iter().map(|&i| headers[i].clone()).collect(), columns))
}

pub fn tactic_name(m: Mirror) -> String {
    format!("download_{}", m.as_str())
}

/// One download tactic per mirror, all sharing the models trained on `trace`.
/// Also returns the trace's most recent download latencies and its last
/// timestamp, which seed the per-tick feature vectors.
fn download_tactics(trace: &[TraceRecord]) -> CliResult<(Vec<Tactic>, ModelRegistry, Vec<f64>, i64)> {
    let ds = to_regression_dataset(trace)?;
    let models = TacticModels {
        latency: fit_mra(&ds.design, &ds.latency)?,
        cost: fit_mra(&ds.design, &ds.cost)?,
    };
    let names: Vec<String> = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let legacy = legacy_download_tactic();
    let mut registry = ModelRegistry::default();
    let mut tactics = Vec::new();
    for m in Mirror::ALL {
        let name = tactic_name(m);
        tactics.push(Tactic::new(name.clone(), legacy.static_latency, legacy.static_cost, names.clone())?);
        registry.tactics.insert(name, models.clone());
    }
    let latencies: Vec<f64> = trace
        .iter()
        .filter(|r| r.phase == Phase::Downloading)
        .map(|r| r.latency_seconds)
        .collect();
    let recent = latencies[latencies.len() - LAG_WINDOW..].to_vec();
    let last_ts = trace.iter().map(|r| r.timestamp).max().unwrap_or_default();
    Ok((tactics, registry, recent, last_ts))
}

pub fn run(args: &MonitorArgs, specs: &[SlaSpec], history: (Vec<String>, Vec<Vec<f64>>), trace: &[TraceRecord], out: &mut dyn Write) -> CliResult<()> {
    let min_points = MIN_DIFFERENCED_LEN + ArimaOrder::DIFFERENCED_AR1.d;
    if args.window < min_points {
        return Err(CliError::Validation(format!("window must be at least {min_points}, got {}", args.window)));
    }
    let cfg = &args.workflow;
    cfg.utility.validate()?;
    if !(cfg.tick_seconds.is_finite() && cfg.tick_seconds > 0.0) {
        return Err(CliError::Validation("tick seconds must be positive".into()));
    }
    let (names, columns) = history;
    let mut by_spec = HashMap::new();
    for s in specs {
        let i = names
            .iter()
            .position(|n| *n == s.name)
            .ok_or_else(|| CliError::Validation(format!("history has no column for spec '{}'", s.name)))?;
        by_spec.insert(s.name.clone(), &columns[i]);
    }
    let n = columns.first().map_or(0, Vec::len);
    if n < min_points {
        return Err(CliError::Validation(format!("history needs at least {min_points} rows, got {n}")));
    }

    let (tactics, mut registry, recent, last_ts) = download_tactics(trace)?;
    let io_err = |e: std::io::Error| CliError::Io(e.to_string());

    for (k, tick) in (min_points - 1..n).enumerate() {
        let start = (tick + 1).saturating_sub(args.window);
        let mut histories = HashMap::new();
        for (name, col) in &by_spec {
            histories.insert(name.clone(), TimeSeries::new(col[start..=tick].to_vec(), cfg.tick_seconds)?);
        }
        let refit = if args.refit_every == 0 { k == 0 } else { k % args.refit_every == 0 };
        if refit {
            registry.forecasters.clear();
            for (name, h) in &histories {
                if let Ok(m) = fit_arima(h, ArimaOrder::DIFFERENCED_AR1) {
                    registry.forecasters.insert(name.clone(), m);
                }
            }
        }
        let ts = last_ts + ((tick + 1) as f64 * cfg.tick_seconds).round() as i64;
        let mut features = HashMap::new();
        for m in Mirror::ALL {
            features.insert(tactic_name(m), feature_vector(&recent, ts, m)?);
        }
        let inputs = TickInputs {
            specs,
            histories: &histories,
            tactics: &tactics,
            features: &features,
            registry: &registry,
        };
        let records: Vec<SpecRecord> = workflow_tick(&inputs, cfg).iter().map(SpecRecord::from).collect();
        let line = serde_json::to_string(&TickLine { tick, specs: &records })
            .map_err(|e| CliError::Validation(e.to_string()))?;
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
