//! Shared domain types: monitored series, SLA specifications, tactics and
//! the cost-aware utility function used to score adaptation options.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TvaError};

/// Uniformly sampled observations of one monitored quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    interval: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, interval: f64) -> Result<Self> {
        if !(interval.is_finite() && interval > 0.0) {
            return Err(TvaError::invalid(format!(
                "sampling interval must be positive, got {interval}"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TvaError::invalid(format!(
                "non-finite observation at index {i}"
            )));
        }
        Ok(Self { values, interval })
    }

    /// Series with a one-second sampling interval.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(values, 1.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Contiguous sub-series `[start, end)` sharing the sampling interval.
    pub fn slice(&self, start: usize, end: usize) -> TimeSeries {
        TimeSeries {
            values: self.values[start..end].to_vec(),
            interval: self.interval,
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Observed value must stay at or below the threshold.
    UpperBound,
    /// Observed value must stay at or above the threshold.
    LowerBound,
}

impl Direction {
    /// Whether `value` breaks a threshold in this direction.
    pub fn violates(self, value: f64, threshold: f64) -> bool {
        match self {
            Direction::UpperBound => value > threshold,
            Direction::LowerBound => value < threshold,
        }
    }
}

/// One monitored SLA requirement with its penalty and reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaSpec {
    pub name: String,
    pub threshold: f64,
    pub direction: Direction,
    pub penalty: f64,
    pub reward: f64,
}

impl SlaSpec {
    pub fn new(
        name: impl Into<String>,
        threshold: f64,
        direction: Direction,
        penalty: f64,
        reward: f64,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            threshold,
            direction,
            penalty,
            reward,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(TvaError::invalid("spec name must not be empty"));
        }
        if !self.threshold.is_finite() {
            return Err(TvaError::invalid(format!(
                "spec '{}': threshold must be finite",
                self.name
            )));
        }
        if !(self.penalty.is_finite() && self.penalty >= 0.0) {
            return Err(TvaError::invalid(format!(
                "spec '{}': penalty must be non-negative",
                self.name
            )));
        }
        if !(self.reward.is_finite() && self.reward >= 0.0) {
            return Err(TvaError::invalid(format!(
                "spec '{}': reward must be non-negative",
                self.name
            )));
        }
        Ok(())
    }
}

/// Validates a set of specs belonging to one system (unique names).
pub fn validate_spec_set(specs: &[SlaSpec]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for spec in specs {
        spec.validate()?;
        if !seen.insert(spec.name.as_str()) {
            return Err(TvaError::invalid(format!(
                "duplicate spec name '{}'",
                spec.name
            )));
        }
    }
    Ok(())
}

/// Specs sorted by reward, highest first. Equal rewards keep input order.
pub fn order_specs_by_reward(specs: &[SlaSpec]) -> Vec<SlaSpec> {
    let mut out = specs.to_vec();
    out.sort_by(|a, b| b.reward.total_cmp(&a.reward));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Latency,
    Cost,
}

/// An adaptation tactic with its legacy static latency and cost values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tactic {
    pub name: String,
    pub static_latency: f64,
    pub static_cost: f64,
    pub feature_names: Vec<String>,
}

impl Tactic {
    pub fn new(
        name: impl Into<String>,
        static_latency: f64,
        static_cost: f64,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let name = name.into();
        if !(static_latency.is_finite() && static_latency >= 0.0) {
            return Err(TvaError::invalid(format!(
                "tactic '{name}': static latency must be non-negative"
            )));
        }
        if !(static_cost.is_finite() && static_cost >= 0.0) {
            return Err(TvaError::invalid(format!(
                "tactic '{name}': static cost must be non-negative"
            )));
        }
        if feature_names.is_empty() {
            return Err(TvaError::invalid(format!(
                "tactic '{name}': feature list must not be empty"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = feature_names.iter().find(|f| !seen.insert(f.as_str())) {
            return Err(TvaError::invalid(format!(
                "tactic '{name}': duplicate feature '{dup}'"
            )));
        }
        Ok(Self {
            name,
            static_latency,
            static_cost,
            feature_names,
        })
    }

    pub fn static_value(&self, kind: AttributeKind) -> f64 {
        match kind {
            AttributeKind::Latency => self.static_latency,
            AttributeKind::Cost => self.static_cost,
        }
    }
}

/// Inputs of the cost-aware utility function for one measurement interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    /// Interval length in seconds.
    pub tau: f64,
    /// Average response rate (requests/s).
    pub arrival_rate: f64,
    /// Average response time (s).
    pub response_time: f64,
    /// Target response time (s).
    pub target_response_time: f64,
    /// Maximum request rate (requests/s).
    pub max_rate: f64,
    /// Fraction of responses carrying optional content.
    pub dimmer: f64,
    pub reward_optional: f64,
    pub reward_mandatory: f64,
    pub cost: f64,
}

impl UtilityParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.tau,
            self.arrival_rate,
            self.response_time,
            self.target_response_time,
            self.max_rate,
            self.dimmer,
            self.reward_optional,
            self.reward_mandatory,
            self.cost,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(TvaError::invalid("utility parameters must be finite"));
        }
        if self.cost <= 0.0 {
            return Err(TvaError::invalid(format!(
                "utility cost must be positive, got {}",
                self.cost
            )));
        }
        if !(0.0..=1.0).contains(&self.dimmer) {
            return Err(TvaError::invalid(format!(
                "dimmer must lie in [0, 1], got {}",
                self.dimmer
            )));
        }
        if self.tau <= 0.0 {
            return Err(TvaError::invalid("interval length tau must be positive"));
        }
        if self.arrival_rate < 0.0 || self.max_rate < 0.0 {
            return Err(TvaError::invalid("request rates must be non-negative"));
        }
        Ok(())
    }
}

/// Utility of one interval, divided by the cost of operating the system.
///
/// Meeting the target response time earns the dimmer-weighted mix of optional
/// and mandatory rewards; missing it yields `tau * min(0, a - k) * R_O / C`,
/// which is never positive.
pub fn utility(p: &UtilityParams) -> Result<f64> {
    p.validate()?;
    let u = if p.response_time <= p.target_response_time {
        p.tau
            * p.arrival_rate
            * (p.dimmer * p.reward_optional + (1.0 - p.dimmer) * p.reward_mandatory)
    } else {
        p.tau * (p.arrival_rate - p.max_rate).min(0.0) * p.reward_optional
    };
    Ok(u / p.cost)
}
