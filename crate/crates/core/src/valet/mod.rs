//! Emulated tactic-volatility traces in the style of a download/energy
//! monitoring tool, plus ingestion of recorded traces.
//!
//! Every simulated minute produces one download per mirror, one idle energy
//! reading, and periodically a grep workload record. Download latency is
//!
//! ```text
//! base(mirror) * diurnal(hour) * exp(sigma(mirror) * z) + spike
//! ```
//!
//! where `diurnal(h) = 1 + amplitude * cos(2 pi (h - peak) / 24)` and a spike
//! of `base * magnitude * (0.5 + u)` occurs with the mirror's spike
//! probability. The default parameters are plausible inventions: Germany is
//! the slowest and most volatile mirror. Idle energy is an integrated AR(1)
//! process, i.e. its per-reading increments are autocorrelated and carry a
//! small warming drift.

mod csv_io;
mod dataset;
mod sampling;

pub use csv_io::{ingest_trace_csv, read_trace_csv, write_trace_csv, TRACE_CSV_HEADER};
pub use dataset::{
    feature_vector, hour_angle, hour_of_day, legacy_download_tactic, to_regression_dataset,
    RegressionDataset, FEATURE_NAMES, LAG_WINDOW, MIN_DOWNLOAD_RECORDS,
};
pub use sampling::{
    run_rq1_simulation, sample_latency, HistogramBin, LatencyDistribution, Rq1Result,
    TacticProfile, HISTOGRAM_BIN_WIDTH,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TvaError};
use crate::exec::run_seed;
use crate::types::TimeSeries;

/// 2019-06-01T00:00:00Z.
pub const DEFAULT_START_TIMESTAMP: i64 = 1_559_347_200;
pub const IDLE_INTERVAL_SECONDS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mirror {
    Germany,
    Massachusetts,
    Ontario,
}

impl Mirror {
    pub const ALL: [Mirror; 3] = [Mirror::Germany, Mirror::Massachusetts, Mirror::Ontario];

    pub fn as_str(self) -> &'static str {
        match self {
            Mirror::Germany => "germany",
            Mirror::Massachusetts => "massachusetts",
            Mirror::Ontario => "ontario",
        }
    }

    pub fn parse(s: &str) -> Option<Mirror> {
        Mirror::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Downloading,
    Idle,
    Grep,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Downloading => "download",
            Phase::Idle => "idle",
            Phase::Grep => "grep",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        [Phase::Downloading, Phase::Idle, Phase::Grep]
            .into_iter()
            .find(|p| p.as_str() == s)
    }
}

/// One trace row. Idle and grep rows carry the mirror of the preceding
/// download.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub timestamp: i64,
    pub mirror: Mirror,
    pub phase: Phase,
    pub latency_seconds: f64,
    pub energy_joules: f64,
}

impl TraceRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.latency_seconds.is_finite() && self.latency_seconds >= 0.0) {
            return Err(TvaError::invalid(format!(
                "latency must be finite and non-negative, got {}",
                self.latency_seconds
            )));
        }
        if !(self.energy_joules.is_finite() && self.energy_joules >= 0.0) {
            return Err(TvaError::invalid(format!(
                "energy must be finite and non-negative, got {}",
                self.energy_joules
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorProfile {
    pub mirror: Mirror,
    /// Median latency at the diurnal mean, seconds.
    pub base_latency: f64,
    /// Log-scale sd of the multiplicative noise.
    pub noise_sigma: f64,
    pub spike_probability: f64,
    /// Spike size as a multiple of the base latency.
    pub spike_magnitude: f64,
    /// Power draw while downloading, watts.
    pub watts: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdleProfile {
    /// Starting idle energy per reading, joules.
    pub base_joules: f64,
    /// Constant term of the increment process.
    pub drift: f64,
    /// Autocorrelation of successive increments.
    pub phi: f64,
    /// Innovation sd of the increment process.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityConfig {
    pub start_timestamp: i64,
    pub mirrors: Vec<MirrorProfile>,
    pub diurnal_amplitude: f64,
    pub diurnal_peak_hour: f64,
    /// Additive noise sd of download energy, joules.
    pub energy_noise_sd: f64,
    pub idle: IdleProfile,
    /// Emit a grep record every this many minutes; 0 disables grep rows.
    pub grep_every_minutes: u32,
    pub grep_base_latency: f64,
    pub grep_watts: f64,
}

impl Default for VolatilityConfig {
    fn default() -> Self {
        let m = |mirror, base_latency, noise_sigma, spike_probability, watts| MirrorProfile {
            mirror,
            base_latency,
            noise_sigma,
            spike_probability,
            spike_magnitude: 1.5,
            watts,
        };
        Self {
            start_timestamp: DEFAULT_START_TIMESTAMP,
            mirrors: vec![
                m(Mirror::Germany, 9.0, 0.25, 0.06, 2.6),
                m(Mirror::Massachusetts, 4.0, 0.08, 0.01, 2.4),
                m(Mirror::Ontario, 5.5, 0.10, 0.015, 2.4),
            ],
            diurnal_amplitude: 0.3,
            diurnal_peak_hour: 20.0,
            energy_noise_sd: 0.5,
            idle: IdleProfile {
                base_joules: 28.0,
                drift: 0.004,
                phi: 0.5,
                sd: 0.02,
            },
            grep_every_minutes: 10,
            grep_base_latency: 0.8,
            grep_watts: 3.1,
        }
    }
}

impl VolatilityConfig {
    /// Degenerate configuration: no noise and no spikes anywhere.
    pub fn noiseless() -> Self {
        let mut cfg = Self::default();
        for m in &mut cfg.mirrors {
            m.noise_sigma = 0.0;
            m.spike_probability = 0.0;
        }
        cfg.energy_noise_sd = 0.0;
        cfg.idle.sd = 0.0;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.mirrors.is_empty() {
            return Err(TvaError::invalid("at least one mirror is required"));
        }
        for m in &self.mirrors {
            if !(m.base_latency.is_finite() && m.base_latency > 0.0) {
                return Err(TvaError::invalid(format!(
                    "{}: base latency must be positive",
                    m.mirror.as_str()
                )));
            }
            if !(0.0..=1.0).contains(&m.spike_probability) {
                return Err(TvaError::invalid(format!(
                    "{}: spike probability must lie in [0, 1]",
                    m.mirror.as_str()
                )));
            }
            if !(m.noise_sigma >= 0.0 && m.spike_magnitude >= 0.0 && m.watts > 0.0) {
                return Err(TvaError::invalid(format!(
                    "{}: noise, spike magnitude and power must be non-negative",
                    m.mirror.as_str()
                )));
            }
        }
        if !(0.0..1.0).contains(&self.diurnal_amplitude) {
            return Err(TvaError::invalid("diurnal amplitude must lie in [0, 1)"));
        }
        if !(self.energy_noise_sd >= 0.0 && self.idle.sd >= 0.0) {
            return Err(TvaError::invalid("noise levels must be non-negative"));
        }
        if self.idle.base_joules.is_nan() || self.idle.base_joules <= 0.0 {
            return Err(TvaError::invalid("idle base energy must be positive"));
        }
        if self.idle.phi.abs() >= 1.0 {
            return Err(TvaError::invalid("idle increment autocorrelation must satisfy |phi| < 1"));
        }
        if !(self.grep_base_latency > 0.0 && self.grep_watts > 0.0) {
            return Err(TvaError::invalid("grep latency and power must be positive"));
        }
        Ok(())
    }

    /// Diurnal latency multiplier at a fractional hour of the day.
    pub fn diurnal_multiplier(&self, hour: f64) -> f64 {
        let angle = 2.0 * std::f64::consts::PI * (hour - self.diurnal_peak_hour) / 24.0;
        1.0 + self.diurnal_amplitude * angle.cos()
    }
}

/// Rounds to the 6-decimal grid used by the trace CSV format.
pub(crate) fn quantize(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

const DOWNLOAD_SPACING: i64 = 15;
const IDLE_OFFSET: i64 = 45;
const GREP_OFFSET: i64 = 50;

/// Generates a deterministic trace covering `duration_minutes` minutes.
pub fn generate_trace(
    duration_minutes: u32,
    seed: u64,
    cfg: &VolatilityConfig,
) -> Result<Vec<TraceRecord>> {
    if duration_minutes < 1 {
        return Err(TvaError::invalid("duration must be at least one minute"));
    }
    cfg.validate()?;
    let mut latency_rng = ChaCha8Rng::seed_from_u64(run_seed(seed, 0));
    let mut energy_rng = ChaCha8Rng::seed_from_u64(run_seed(seed, 1));
    let mut idle_rng = ChaCha8Rng::seed_from_u64(run_seed(seed, 2));
    let energy_noise = Normal::new(0.0, cfg.energy_noise_sd)
        .map_err(|e| TvaError::invalid(e.to_string()))?;

    let per_minute = cfg.mirrors.len() + 2;
    let mut out = Vec::with_capacity(duration_minutes as usize * per_minute);
    let mut idle_level = cfg.idle.base_joules;
    let mut idle_step = 0.0;

    for minute in 0..duration_minutes as i64 {
        let t0 = cfg.start_timestamp + minute * 60;
        let mut last_mirror = cfg.mirrors[0].mirror;
        for (k, m) in cfg.mirrors.iter().enumerate() {
            let ts = t0 + k as i64 * DOWNLOAD_SPACING;
            let hour = hour_of_day(ts);
            let z: f64 = StandardNormal.sample(&mut latency_rng);
            let mut latency = m.base_latency * cfg.diurnal_multiplier(hour) * (m.noise_sigma * z).exp();
            if m.spike_probability > 0.0 && latency_rng.random_bool(m.spike_probability) {
                let u: f64 = latency_rng.random();
                latency += m.base_latency * m.spike_magnitude * (0.5 + u);
            }
            let energy = (m.watts * latency + energy_noise.sample(&mut energy_rng)).max(0.0);
            out.push(TraceRecord {
                timestamp: ts,
                mirror: m.mirror,
                phase: Phase::Downloading,
                latency_seconds: quantize(latency),
                energy_joules: quantize(energy),
            });
            last_mirror = m.mirror;
        }

        let e: f64 = StandardNormal.sample(&mut idle_rng);
        idle_step = cfg.idle.drift + cfg.idle.phi * idle_step + cfg.idle.sd * e;
        idle_level = (idle_level + idle_step).max(0.0);
        out.push(TraceRecord {
            timestamp: t0 + IDLE_OFFSET,
            mirror: last_mirror,
            phase: Phase::Idle,
            latency_seconds: 0.0,
            energy_joules: quantize(idle_level),
        });

        if cfg.grep_every_minutes > 0 && minute % cfg.grep_every_minutes as i64 == 0 {
            let z: f64 = StandardNormal.sample(&mut latency_rng);
            let latency = cfg.grep_base_latency * (0.1 * z).exp();
            out.push(TraceRecord {
                timestamp: t0 + GREP_OFFSET,
                mirror: last_mirror,
                phase: Phase::Grep,
                latency_seconds: quantize(latency),
                energy_joules: quantize(cfg.grep_watts * latency),
            });
        }
    }
    Ok(out)
}

/// Idle energy readings in timestamp order.
pub fn to_idle_series(records: &[TraceRecord], interval: f64) -> Result<TimeSeries> {
    let mut idle: Vec<&TraceRecord> = records.iter().filter(|r| r.phase == Phase::Idle).collect();
    if idle.is_empty() {
        return Err(TvaError::Empty("idle records"));
    }
    idle.sort_by_key(|r| r.timestamp);
    TimeSeries::new(idle.iter().map(|r| r.energy_joules).collect(), interval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_day_has_enough_download_records() {
        let trace = generate_trace(1440, 42, &VolatilityConfig::default()).unwrap();
        let downloads = trace.iter().filter(|r| r.phase == Phase::Downloading).count();
        assert!(downloads >= 1400);
        assert!(trace.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
        assert!(trace.iter().all(|r| r.validate().is_ok()));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = VolatilityConfig::default();
        assert_eq!(generate_trace(300, 7, &cfg).unwrap(), generate_trace(300, 7, &cfg).unwrap());
        assert_ne!(generate_trace(300, 7, &cfg).unwrap(), generate_trace(300, 8, &cfg).unwrap());
    }

    #[test]
    fn noiseless_latency_is_base_times_diurnal() {
        let cfg = VolatilityConfig::noiseless();
        let trace = generate_trace(1440, 3, &cfg).unwrap();
        for r in trace.iter().filter(|r| r.phase == Phase::Downloading) {
            let base = cfg.mirrors.iter().find(|m| m.mirror == r.mirror).unwrap().base_latency;
            let expected = quantize(base * cfg.diurnal_multiplier(hour_of_day(r.timestamp)));
            assert_eq!(r.latency_seconds, expected);
        }
    }

    #[test]
    fn diurnal_peak_at_configured_hour() {
        let cfg = VolatilityConfig::default();
        assert!((cfg.diurnal_multiplier(20.0) - 1.3).abs() < 1e-12);
        assert!((cfg.diurnal_multiplier(8.0) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn germany_is_most_volatile() {
        let trace = generate_trace(1440, 42, &VolatilityConfig::default()).unwrap();
        let sd = |m: Mirror| {
            let v: Vec<f64> = trace
                .iter()
                .filter(|r| r.phase == Phase::Downloading && r.mirror == m)
                .map(|r| r.latency_seconds)
                .collect();
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        assert!(sd(Mirror::Germany) > sd(Mirror::Massachusetts));
        assert!(sd(Mirror::Germany) > sd(Mirror::Ontario));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = VolatilityConfig::default();
        cfg.mirrors[0].spike_probability = 1.5;
        assert!(generate_trace(10, 1, &cfg).is_err());
        let mut cfg = VolatilityConfig::default();
        cfg.mirrors[1].base_latency = 0.0;
        assert!(generate_trace(10, 1, &cfg).is_err());
        assert!(generate_trace(0, 1, &VolatilityConfig::default()).is_err());
    }

    #[test]
    fn idle_series_extraction() {
        let trace = generate_trace(200, 5, &VolatilityConfig::default()).unwrap();
        let idle = to_idle_series(&trace, IDLE_INTERVAL_SECONDS).unwrap();
        let n_idle = trace.iter().filter(|r| r.phase == Phase::Idle).count();
        assert_eq!(idle.len(), n_idle);
        assert_eq!(idle.interval(), 60.0);
        let downloads_only: Vec<TraceRecord> = trace
            .iter()
            .filter(|r| r.phase == Phase::Downloading)
            .copied()
            .collect();
        assert!(to_idle_series(&downloads_only, 60.0).is_err());
    }

    #[test]
    fn idle_and_download_rows_partition_non_grep_records() {
        let trace = generate_trace(120, 5, &VolatilityConfig::default()).unwrap();
        let idle = to_idle_series(&trace, 60.0).unwrap().len();
        let downloads = trace.iter().filter(|r| r.phase == Phase::Downloading).count();
        let non_grep = trace.iter().filter(|r| r.phase != Phase::Grep).count();
        assert_eq!(idle + downloads, non_grep);
        assert!(trace.iter().any(|r| r.phase == Phase::Grep));
    }
}
