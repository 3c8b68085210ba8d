//! Tactic volatility aware adaptation: time-series forecasting of SLA
//! metrics, regression predictors for tactic latency and cost, the
//! monitoring workflow that ties them together, and an emulator that
//! produces traces to train and evaluate on.

pub mod arima;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod metrics;
pub mod regression;
pub mod types;
pub mod valet;
pub mod workflow;

pub use arima::{fit_arima, forecast, ArimaModel, ArimaOrder};
pub use error::{Result, TvaError};
pub use exec::{run_seed, Execution};
pub use metrics::{mae, rmse, ScorePair};
pub use regression::{fit_bayesian_ridge, fit_mra, predict, DesignMatrix, RegressionModel, ResponseVector};
pub use types::{utility, AttributeKind, Direction, SlaSpec, Tactic, TimeSeries, UtilityParams};
pub use workflow::{analyze_specification, rank_tactics, workflow_tick, SpecAnalysis, SpecStatus, TacticEstimate};
