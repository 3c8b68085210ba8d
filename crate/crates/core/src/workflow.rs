//! The monitoring loop: forecast each SLA specification and, when one is
//! potentially broken, estimate latency and cost for every tactic.

use std::collections::HashMap;

use serde::Serialize;

use crate::arima::{fit_arima, ArimaModel, ArimaOrder};
use crate::error::{Result, TvaError};
use crate::regression::{predict, RegressionModel};
use crate::types::{order_specs_by_reward, utility, Direction, SlaSpec, Tactic, TimeSeries, UtilityParams};

pub const DEFAULT_RISK_MARGIN: f64 = 0.10;
pub const DEFAULT_HORIZON: usize = 5;
pub const DEFAULT_TICK_SECONDS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecStatus {
    Healthy,
    AtRisk,
    Broken,
}

impl SpecStatus {
    pub fn needs_adaptation(self) -> bool {
        self != SpecStatus::Healthy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecAnalysis {
    pub spec_name: String,
    pub forecast_values: Vec<f64>,
    pub status: SpecStatus,
    /// First forecast step (1-based) at or inside the risk margin. Only set
    /// for `AtRisk`; a `Broken` spec is already violated, so it has no step.
    pub first_violation_step: Option<usize>,
}

/// Whether `value` is past the threshold or within `margin * |threshold|`
/// of it on the approach side.
fn at_risk(direction: Direction, value: f64, threshold: f64, margin: f64) -> bool {
    let slack = margin * threshold.abs();
    match direction {
        Direction::UpperBound => value > threshold - slack,
        Direction::LowerBound => value < threshold + slack,
    }
}

/// Forecasts `spec` from its history and classifies it.
///
/// `fitted` is a model trained ahead of time; it is re-anchored on `history`
/// instead of refitting. Without one, ARIMA(1,1,0) is fitted on `history`.
pub fn analyze_specification(
    spec: &SlaSpec,
    history: &TimeSeries,
    horizon: usize,
    risk_margin: f64,
    fitted: Option<&ArimaModel>,
) -> Result<SpecAnalysis> {
    if !(0.0..1.0).contains(&risk_margin) {
        return Err(TvaError::invalid(format!(
            "risk margin must lie in [0, 1), got {risk_margin}"
        )));
    }
    if horizon < 1 {
        return Err(TvaError::invalid("forecast horizon must be at least 1"));
    }
    let model = match fitted {
        Some(m) => m.anchored(history)?,
        None => fit_arima(history, ArimaOrder::DIFFERENCED_AR1)?,
    };
    let forecast_values = model.forecast(horizon)?;
    let current = history.last().ok_or(TvaError::Empty("history"))?;

    let (status, first_violation_step) = if spec.direction.violates(current, spec.threshold) {
        (SpecStatus::Broken, None)
    } else {
        match forecast_values
            .iter()
            .position(|&f| at_risk(spec.direction, f, spec.threshold, risk_margin))
        {
            Some(i) => (SpecStatus::AtRisk, Some(i + 1)),
            None => (SpecStatus::Healthy, None),
        }
    };
    Ok(SpecAnalysis {
        spec_name: spec.name.clone(),
        forecast_values,
        status,
        first_violation_step,
    })
}

fn estimate(tactic: &Tactic, features: &[f64], model: Option<&RegressionModel>, what: &str) -> Result<f64> {
    let model = model.ok_or_else(|| {
        TvaError::invalid(format!("no trained {what} model for tactic '{}'", tactic.name))
    })?;
    if tactic.feature_names.len() + 1 != model.width() {
        return Err(TvaError::DimensionMismatch {
            expected: tactic.feature_names.len() + 1,
            got: model.width(),
        });
    }
    Ok(predict(model, features)?.value)
}

/// Predicted tactic latency in seconds, clamped at zero.
pub fn make_latency_estimate(tactic: &Tactic, features: &[f64], model: Option<&RegressionModel>) -> Result<f64> {
    estimate(tactic, features, model, "latency")
}

/// Predicted tactic cost, clamped at zero.
pub fn make_cost_estimate(tactic: &Tactic, features: &[f64], model: Option<&RegressionModel>) -> Result<f64> {
    estimate(tactic, features, model, "cost")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TacticEstimate {
    pub tactic_name: String,
    pub predicted_latency: f64,
    pub predicted_cost: f64,
    pub utility_score: f64,
}

/// Orders tactics for adaptation.
///
/// Tactics whose predicted latency lands before the forecast violation
/// (`latency <= first_violation_step * tick_seconds`) come first. A broken
/// spec has a zero deadline; a healthy one has none. Within each group the
/// order is utility descending, then cost ascending, then input order.
pub fn rank_tactics(
    estimates: &[TacticEstimate],
    analysis: &SpecAnalysis,
    tick_seconds: f64,
) -> Result<Vec<TacticEstimate>> {
    if estimates.is_empty() {
        return Err(TvaError::Empty("tactic estimates"));
    }
    if !(tick_seconds.is_finite() && tick_seconds > 0.0) {
        return Err(TvaError::invalid("tick length must be positive"));
    }
    let deadline = match (analysis.status, analysis.first_violation_step) {
        (SpecStatus::Broken, _) => 0.0,
        (_, Some(step)) => step as f64 * tick_seconds,
        (_, None) => f64::INFINITY,
    };
    let mut out = estimates.to_vec();
    out.sort_by(|a, b| {
        let ready_a = a.predicted_latency <= deadline;
        let ready_b = b.predicted_latency <= deadline;
        ready_b
            .cmp(&ready_a)
            .then(b.utility_score.total_cmp(&a.utility_score))
            .then(a.predicted_cost.total_cmp(&b.predicted_cost))
    });
    Ok(out)
}

/// Trained latency and cost predictors for one tactic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TacticModels {
    pub latency: RegressionModel,
    pub cost: RegressionModel,
}

/// Models trained before the loop starts; read-only during a tick.
#[derive(Debug, Clone, Default)]
pub struct ModelRegistry {
    pub tactics: HashMap<String, TacticModels>,
    /// Optional pre-fitted forecasters keyed by spec name.
    pub forecasters: HashMap<String, ArimaModel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkflowConfig {
    pub horizon: usize,
    pub risk_margin: f64,
    pub tick_seconds: f64,
    /// Utility inputs; `cost` is replaced by each tactic's predicted cost.
    pub utility: UtilityParams,
    /// Floor applied to predicted cost before dividing by it.
    pub min_cost: f64,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            risk_margin: DEFAULT_RISK_MARGIN,
            tick_seconds: DEFAULT_TICK_SECONDS,
            utility: UtilityParams {
                tau: 60.0,
                arrival_rate: 10.0,
                response_time: 0.5,
                target_response_time: 0.7,
                max_rate: 20.0,
                dimmer: 1.0,
                reward_optional: 2.0,
                reward_mandatory: 1.0,
                cost: 1.0,
            },
            min_cost: 1e-6,
        }
    }
}

/// Inputs for one pass of the loop.
pub struct TickInputs<'a> {
    pub specs: &'a [SlaSpec],
    pub histories: &'a HashMap<String, TimeSeries>,
    pub tactics: &'a [Tactic],
    /// Current feature vector (with intercept) per tactic name.
    pub features: &'a HashMap<String, Vec<f64>>,
    pub registry: &'a ModelRegistry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecOutcome {
    pub spec_name: String,
    /// Analysis plus ranked estimates (empty when healthy).
    pub result: Result<(SpecAnalysis, Vec<TacticEstimate>)>,
}

fn estimates_for(inputs: &TickInputs<'_>, cfg: &WorkflowConfig) -> Result<Vec<TacticEstimate>> {
    inputs
        .tactics
        .iter()
        .map(|t| {
            let features = inputs
                .features
                .get(&t.name)
                .ok_or_else(|| TvaError::invalid(format!("no features for tactic '{}'", t.name)))?;
            let models = inputs.registry.tactics.get(&t.name);
            let latency = make_latency_estimate(t, features, models.map(|m| &m.latency))?;
            let cost = make_cost_estimate(t, features, models.map(|m| &m.cost))?;
            let params = UtilityParams {
                cost: cost.max(cfg.min_cost),
                ..cfg.utility
            };
            Ok(TacticEstimate {
                tactic_name: t.name.clone(),
                predicted_latency: latency,
                predicted_cost: cost,
                utility_score: utility(&params)?,
            })
        })
        .collect()
}

/// One pass over all specs in reward order. Estimates are produced only
/// for specs that are at risk or broken; errors are kept per spec.
pub fn workflow_tick(inputs: &TickInputs<'_>, cfg: &WorkflowConfig) -> Vec<SpecOutcome> {
    order_specs_by_reward(inputs.specs)
        .into_iter()
        .map(|spec| {
            let result = (|| {
                let history = inputs
                    .histories
                    .get(&spec.name)
                    .ok_or_else(|| TvaError::invalid(format!("no history for spec '{}'", spec.name)))?;
                let analysis = analyze_specification(
                    &spec,
                    history,
                    cfg.horizon,
                    cfg.risk_margin,
                    inputs.registry.forecasters.get(&spec.name),
                )?;
                if !analysis.status.needs_adaptation() {
                    return Ok((analysis, Vec::new()));
                }
                let ranked = rank_tactics(&estimates_for(inputs, cfg)?, &analysis, cfg.tick_seconds)?;
                Ok((analysis, ranked))
            })();
            SpecOutcome {
                spec_name: spec.name,
                result,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TacticRecord {
    pub name: String,
    pub latency: f64,
    pub cost: f64,
    pub utility: f64,
    pub rank: usize,
}

/// Serialisable view of one spec's outcome for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecRecord {
    pub name: String,
    pub status: Option<SpecStatus>,
    pub first_violation_step: Option<usize>,
    pub forecast: Vec<f64>,
    pub tactics: Vec<TacticRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl From<&SpecOutcome> for SpecRecord {
    fn from(o: &SpecOutcome) -> Self {
        match &o.result {
            Ok((a, ranked)) => SpecRecord {
                name: o.spec_name.clone(),
                status: Some(a.status),
                first_violation_step: a.first_violation_step,
                forecast: a.forecast_values.clone(),
                tactics: ranked
                    .iter()
                    .enumerate()
                    .map(|(i, e)| TacticRecord {
                        name: e.tactic_name.clone(),
                        latency: e.predicted_latency,
                        cost: e.predicted_cost,
                        utility: e.utility_score,
                        rank: i + 1,
                    })
                    .collect(),
                error: None,
            },
            Err(e) => SpecRecord {
                name: o.spec_name.clone(),
                status: None,
                first_violation_step: None,
                forecast: Vec::new(),
                tactics: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    }
}
