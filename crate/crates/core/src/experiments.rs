//! Replication harness: repeated randomised train/test experiments scoring
//! the forecaster and the tactic predictors against naive references.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arima::{fit_arima, ArimaOrder};
use crate::error::{Result, TvaError};
use crate::exec::{run_seed, Execution};
use crate::metrics::ScorePair;
use crate::regression::{
    baseline_mean, fit_bayesian_ridge, fit_mra, predict, DesignMatrix, RegressionModel,
    ResponseVector, DEFAULT_BRR_ALPHA, DEFAULT_BRR_BETA, DEFAULT_BRR_ITERS,
};
use crate::types::TimeSeries;

pub const MIN_TRAIN_LEN: usize = 12;
pub const MIN_TEST_LEN: usize = 10;
pub const MIN_PREDICTOR_ROWS: usize = 40;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;

pub const MODEL_ARIMA: &str = "arima";
pub const MODEL_PERSISTENCE: &str = "persistence";
pub const MODEL_MRA: &str = "mra";
pub const MODEL_BRR: &str = "brr";
pub const MODEL_BASELINE_MEAN: &str = "baseline_mean";
pub const MODEL_BASELINE_STATIC: &str = "baseline_static";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub n_runs: usize,
    pub seed: u64,
    pub train_fraction: f64,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(n_runs: usize, seed: u64) -> Self {
        Self {
            n_runs,
            seed,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_train_fraction(mut self, f: f64) -> Self {
        self.train_fraction = f;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_runs < 1 {
            return Err(TvaError::invalid("at least one run is required"));
        }
        check_fraction(self.train_fraction)
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(TvaError::invalid(format!(
            "train fraction must lie in (0, 1), got {f}"
        )));
    }
    Ok(())
}

/// Score of one model on one run. `scores` is `None` when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub run_index: usize,
    pub model_name: String,
    pub scores: Option<ScorePair>,
    pub error: Option<String>,
    pub train_fraction: f64,
    pub seed: u64,
}

impl ExperimentReport {
    fn new(run: usize, model: &str, outcome: Result<ScorePair>, f: f64, seed: u64) -> Self {
        let (scores, error) = match outcome {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Self {
            run_index: run,
            model_name: model.to_string(),
            scores,
            error,
            train_fraction: f,
            seed,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.scores.is_some()
    }
}

/// Splits off a contiguous test window at a seeded random position.
///
/// The window has `round((1 - train_fraction) * n)` points; the training
/// part is everything before it. Points after the window are discarded.
pub fn split_train_test(
    s: &TimeSeries,
    train_fraction: f64,
    seed: u64,
) -> Result<(TimeSeries, TimeSeries)> {
    check_fraction(train_fraction)?;
    let n = s.len();
    let test_len = ((1.0 - train_fraction) * n as f64).round() as usize;
    if test_len < MIN_TEST_LEN {
        return Err(TvaError::TooShort {
            needed: MIN_TEST_LEN,
            got: test_len,
        });
    }
    if n < MIN_TRAIN_LEN + test_len {
        return Err(TvaError::TooShort {
            needed: MIN_TRAIN_LEN + test_len,
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(MIN_TRAIN_LEN..=n - test_len);
    Ok((s.slice(0, start), s.slice(start, start + test_len)))
}

fn forecast_run(s: &TimeSeries, f: f64, run: usize, seed: u64) -> [ExperimentReport; 2] {
    match split_train_test(s, f, seed) {
        Err(e) => [
            ExperimentReport::new(run, MODEL_ARIMA, Err(e.clone()), f, seed),
            ExperimentReport::new(run, MODEL_PERSISTENCE, Err(e), f, seed),
        ],
        Ok((train, test)) => {
            let actual = test.values();
            let arima = fit_arima(&train, ArimaOrder::DIFFERENCED_AR1)
                .and_then(|m| m.forecast(actual.len()))
                .and_then(|fc| ScorePair::score(&fc, actual));
            let last = train.last().unwrap_or_default();
            let persistence = ScorePair::score(&vec![last; actual.len()], actual);
            [
                ExperimentReport::new(run, MODEL_ARIMA, arima, f, seed),
                ExperimentReport::new(run, MODEL_PERSISTENCE, persistence, f, seed),
            ]
        }
    }
}

/// ARIMA(1,1,0) against the persistence forecaster over `cfg.n_runs` splits.
pub fn run_forecast_experiments(
    s: &TimeSeries,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    let per_run = cfg.execution.map_indexed(cfg.n_runs, |run| {
        forecast_run(s, cfg.train_fraction, run, run_seed(cfg.seed, run as u64))
    });
    Ok(per_run.into_iter().flatten().collect())
}

fn score_model(
    model: Result<RegressionModel>,
    x: &DesignMatrix,
    t: &ResponseVector,
) -> Result<ScorePair> {
    let model = model?;
    let predicted = (0..x.n_rows())
        .map(|i| predict(&model, &x.row(i)).map(|p| p.value))
        .collect::<Result<Vec<_>>>()?;
    ScorePair::score(&predicted, t.values())
}

fn predictor_run(
    x: &DesignMatrix,
    t: &ResponseVector,
    static_value: f64,
    f: f64,
    run: usize,
    seed: u64,
) -> [ExperimentReport; 4] {
    let n = x.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let test_len = (((1.0 - f) * n as f64).round() as usize).clamp(1, n - 1);
    let (test_idx, train_idx) = idx.split_at(test_len);
    let mut test_idx = test_idx.to_vec();
    let mut train_idx = train_idx.to_vec();
    test_idx.sort_unstable();
    train_idx.sort_unstable();

    let (x_train, t_train) = (x.select_rows(&train_idx), t.select(&train_idx));
    let (x_test, t_test) = (x.select_rows(&test_idx), t.select(&test_idx));
    let actual = t_test.values();

    let mra = score_model(fit_mra(&x_train, &t_train), &x_test, &t_test);
    let brr = score_model(
        fit_bayesian_ridge(&x_train, &t_train, DEFAULT_BRR_ALPHA, DEFAULT_BRR_BETA, DEFAULT_BRR_ITERS),
        &x_test,
        &t_test,
    );
    let mean = baseline_mean(t_train.values())
        .and_then(|m| ScorePair::score(&vec![m; actual.len()], actual));
    let fixed = ScorePair::score(&vec![static_value; actual.len()], actual);
    [
        ExperimentReport::new(run, MODEL_MRA, mra, f, seed),
        ExperimentReport::new(run, MODEL_BRR, brr, f, seed),
        ExperimentReport::new(run, MODEL_BASELINE_MEAN, mean, f, seed),
        ExperimentReport::new(run, MODEL_BASELINE_STATIC, fixed, f, seed),
    ]
}

/// MRA and BRR against the running-mean and static baselines over random
/// row splits. `static_value` is the tactic's predefined attribute.
pub fn run_predictor_experiments(
    x: &DesignMatrix,
    t: &ResponseVector,
    static_value: f64,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentReport>> {
    cfg.validate()?;
    if x.n_rows() != t.len() {
        return Err(TvaError::DimensionMismatch {
            expected: x.n_rows(),
            got: t.len(),
        });
    }
    if x.n_rows() < MIN_PREDICTOR_ROWS {
        return Err(TvaError::TooShort {
            needed: MIN_PREDICTOR_ROWS,
            got: x.n_rows(),
        });
    }
    let per_run = cfg.execution.map_indexed(cfg.n_runs, |run| {
        predictor_run(x, t, static_value, cfg.train_fraction, run, run_seed(cfg.seed, run as u64))
    });
    Ok(per_run.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub mean_rmse: f64,
    pub min_rmse: f64,
    pub max_rmse: f64,
    pub mean_mae: f64,
    pub min_mae: f64,
    pub max_mae: f64,
}

/// Number of runs in which `model`'s RMSE was strictly below `other`'s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WinCount {
    pub model: String,
    pub other: String,
    pub wins: usize,
    /// Runs where both models produced scores.
    pub compared: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub models: Vec<ModelSummary>,
    pub wins: Vec<WinCount>,
}

impl Summary {
    pub fn model(&self, name: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == name)
    }

    pub fn wins(&self, model: &str, other: &str) -> Option<&WinCount> {
        self.wins.iter().find(|w| w.model == model && w.other == other)
    }

    pub fn total_runs(&self) -> usize {
        self.models.iter().map(|m| m.runs_ok + m.runs_failed).sum()
    }

    pub fn failed_runs(&self) -> usize {
        self.models.iter().map(|m| m.runs_failed).sum()
    }
}

/// Per-model aggregates and pairwise win counts, models in first-seen order.
pub fn summarize(reports: &[ExperimentReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(TvaError::Empty("experiment reports"));
    }
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        if !names.contains(&r.model_name.as_str()) {
            names.push(&r.model_name);
        }
    }
    let mut models = Vec::with_capacity(names.len());
    for name in &names {
        let rows: Vec<&ExperimentReport> =
            reports.iter().filter(|r| r.model_name == *name).collect();
        let ok: Vec<ScorePair> = rows.iter().filter_map(|r| r.scores).collect();
        let agg = |f: fn(&ScorePair) -> f64| -> (f64, f64, f64) {
            if ok.is_empty() {
                return (f64::NAN, f64::NAN, f64::NAN);
            }
            let vals: Vec<f64> = ok.iter().map(f).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (mean, min, max)
        };
        let (mean_rmse, min_rmse, max_rmse) = agg(|s| s.rmse);
        let (mean_mae, min_mae, max_mae) = agg(|s| s.mae);
        models.push(ModelSummary {
            model: name.to_string(),
            runs_ok: ok.len(),
            runs_failed: rows.len() - ok.len(),
            mean_rmse,
            min_rmse,
            max_rmse,
            mean_mae,
            min_mae,
            max_mae,
        });
    }

    let rmse_of = |model: &str, run: usize| {
        reports
            .iter()
            .find(|r| r.model_name == model && r.run_index == run)
            .and_then(|r| r.scores)
            .map(|s| s.rmse)
    };
    let mut runs: Vec<usize> = reports.iter().map(|r| r.run_index).collect();
    runs.sort_unstable();
    runs.dedup();
    let mut wins = Vec::new();
    for a in &names {
        for b in &names {
            if a == b {
                continue;
            }
            let (mut w, mut compared) = (0, 0);
            for &run in &runs {
                if let (Some(ra), Some(rb)) = (rmse_of(a, run), rmse_of(b, run)) {
                    compared += 1;
                    if ra < rb {
                        w += 1;
                    }
                }
            }
            wins.push(WinCount {
                model: a.to_string(),
                other: b.to_string(),
                wins: w,
                compared,
            });
        }
    }
    Ok(Summary { models, wins })
}

/// Formats `x` as a plain decimal with 17 significant digits.
pub fn format_sig17(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            format!("{}{}", digits, "0".repeat(int_len - digits.len()))
        } else {
            format!("{}.{}", &digits[..int_len], &digits[int_len..])
        }
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{body}")
}

pub const REPORT_CSV_HEADER: &str = "run,model,rmse,mae,train_fraction,seed";

/// Writes reports as CSV (LF line endings). Failed runs leave the score
/// columns empty.
pub fn write_reports_csv<W: Write>(mut w: W, reports: &[ExperimentReport]) -> std::io::Result<()> {
    writeln!(w, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        let (rmse, mae) = match r.scores {
            Some(s) => (format_sig17(s.rmse), format_sig17(s.mae)),
            None => (String::new(), String::new()),
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.run_index,
            r.model_name,
            rmse,
            mae,
            format_sig17(r.train_fraction),
            r.seed
        )?;
    }
    Ok(())
}
