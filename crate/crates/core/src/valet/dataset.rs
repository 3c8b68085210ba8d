use std::f64::consts::PI;

use super::{Mirror, Phase, TraceRecord};
use crate::error::{Result, TvaError};
use crate::regression::{DesignMatrix, ResponseVector};
use crate::types::Tactic;

/// Number of preceding downloads needed to build one feature row.
pub const LAG_WINDOW: usize = 5;
pub const MIN_DOWNLOAD_RECORDS: usize = 8;

/// Predictor columns after the intercept. Germany is the reference mirror.
pub const FEATURE_NAMES: [&str; 7] = [
    "lag1_latency",
    "lag2_latency",
    "rolling_mean5_latency",
    "hour_sin",
    "hour_cos",
    "mirror_massachusetts",
    "mirror_ontario",
];

/// Fractional hour of the day (UTC) for a unix timestamp.
pub fn hour_of_day(timestamp: i64) -> f64 {
    timestamp.rem_euclid(86_400) as f64 / 3600.0
}

pub fn hour_angle(timestamp: i64) -> f64 {
    2.0 * PI * hour_of_day(timestamp) / 24.0
}

/// Feature vector (with intercept) for a download from `mirror` at
/// `timestamp`, given earlier download latencies in time order.
pub fn feature_vector(previous_latencies: &[f64], timestamp: i64, mirror: Mirror) -> Result<Vec<f64>> {
    let n = previous_latencies.len();
    if n < LAG_WINDOW {
        return Err(TvaError::TooShort {
            needed: LAG_WINDOW,
            got: n,
        });
    }
    let window = &previous_latencies[n - LAG_WINDOW..];
    let angle = hour_angle(timestamp);
    Ok(vec![
        1.0,
        previous_latencies[n - 1],
        previous_latencies[n - 2],
        window.iter().sum::<f64>() / LAG_WINDOW as f64,
        angle.sin(),
        angle.cos(),
        f64::from(u8::from(mirror == Mirror::Massachusetts)),
        f64::from(u8::from(mirror == Mirror::Ontario)),
    ])
}

/// Download rows turned into a regression problem for latency and energy.
#[derive(Debug, Clone)]
pub struct RegressionDataset {
    pub design: DesignMatrix,
    pub latency: ResponseVector,
    pub cost: ResponseVector,
    pub timestamps: Vec<i64>,
    pub mirrors: Vec<Mirror>,
}

/// Builds the latency/energy regression dataset from download rows.
/// The first [`LAG_WINDOW`] downloads only seed the lag features.
pub fn to_regression_dataset(records: &[TraceRecord]) -> Result<RegressionDataset> {
    let mut downloads: Vec<&TraceRecord> =
        records.iter().filter(|r| r.phase == Phase::Downloading).collect();
    if downloads.len() < MIN_DOWNLOAD_RECORDS {
        return Err(TvaError::TooShort {
            needed: MIN_DOWNLOAD_RECORDS,
            got: downloads.len(),
        });
    }
    downloads.sort_by_key(|r| r.timestamp);
    let latencies: Vec<f64> = downloads.iter().map(|r| r.latency_seconds).collect();

    let n_rows = downloads.len() - LAG_WINDOW;
    let mut rows = Vec::with_capacity(n_rows);
    let mut lat = Vec::with_capacity(n_rows);
    let mut cost = Vec::with_capacity(n_rows);
    let mut timestamps = Vec::with_capacity(n_rows);
    let mut mirrors = Vec::with_capacity(n_rows);
    for i in LAG_WINDOW..downloads.len() {
        let r = downloads[i];
        rows.push(feature_vector(&latencies[..i], r.timestamp, r.mirror)?);
        lat.push(r.latency_seconds);
        cost.push(r.energy_joules);
        timestamps.push(r.timestamp);
        mirrors.push(r.mirror);
    }
    let names = std::iter::once("intercept")
        .chain(FEATURE_NAMES)
        .map(String::from)
        .collect();
    Ok(RegressionDataset {
        design: DesignMatrix::new(rows, names)?,
        latency: ResponseVector::new(lat)?,
        cost: ResponseVector::new(cost)?,
        timestamps,
        mirrors,
    })
}

/// The download tactic as a legacy planner sees it: a fixed advertised
/// latency (seconds) and energy cost (joules).
pub fn legacy_download_tactic() -> Tactic {
    Tactic::new(
        "download",
        5.0,
        12.0,
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    )
    .expect("static tactic definition is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::fit_mra;
    use crate::valet::{generate_trace, VolatilityConfig};

    #[test]
    fn dataset_shape() {
        let trace = generate_trace(60, 4, &VolatilityConfig::default()).unwrap();
        let downloads: Vec<TraceRecord> = trace
            .into_iter()
            .filter(|r| r.phase == Phase::Downloading)
            .take(100)
            .collect();
        let ds = to_regression_dataset(&downloads).unwrap();
        assert_eq!(ds.design.n_rows(), 100 - LAG_WINDOW);
        assert_eq!(ds.design.n_cols(), FEATURE_NAMES.len() + 1);
        assert!((0..ds.design.n_rows()).all(|i| ds.design.row(i)[0] == 1.0));
        assert_eq!(ds.latency.len(), ds.cost.len());
    }

    #[test]
    fn identical_records_force_ridge_fallback() {
        let records: Vec<TraceRecord> = (0..20)
            .map(|i| TraceRecord {
                timestamp: 1000 + i,
                mirror: Mirror::Ontario,
                phase: Phase::Downloading,
                latency_seconds: 4.0,
                energy_joules: 10.0,
            })
            .collect();
        let ds = to_regression_dataset(&records).unwrap();
        let fit = fit_mra(&ds.design, &ds.latency).unwrap();
        assert!(fit.ridge_lambda() > 0.0);
    }

    #[test]
    fn too_few_downloads() {
        let trace = generate_trace(2, 4, &VolatilityConfig::default()).unwrap();
        assert!(to_regression_dataset(&trace).is_err());
    }

    #[test]
    fn hour_features_invert_to_timestamp_hour() {
        let trace = generate_trace(1440, 8, &VolatilityConfig::default()).unwrap();
        let ds = to_regression_dataset(&trace).unwrap();
        for (i, ts) in ds.timestamps.iter().enumerate().step_by(37) {
            let row = ds.design.row(i);
            let angle = row[4].atan2(row[5]).rem_euclid(2.0 * PI);
            let hour = angle * 24.0 / (2.0 * PI);
            let expected = ts.rem_euclid(86_400) / 3600;
            assert_eq!((hour + 1e-9).floor() as i64 % 24, expected, "ts {ts}");
        }
    }

    #[test]
    fn feature_vector_requires_lag_window() {
        assert!(feature_vector(&[1.0, 2.0], 0, Mirror::Germany).is_err());
        let v = feature_vector(&[1.0, 2.0, 3.0, 4.0, 5.0], 0, Mirror::Ontario).unwrap();
        assert_eq!(&v[..4], &[1.0, 5.0, 4.0, 3.0]);
        assert_eq!(&v[6..], &[0.0, 1.0]);
    }
}
