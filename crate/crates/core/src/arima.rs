//! Differenced first-order autoregressive forecasting.
//!
//! The supported family is ARIMA(p, d, 0) with `p <= 1` and `d <= 2`. The
//! differenced series `z` is modelled as `z_t = c + phi * z_{t-1} + e_t` and
//! estimated by conditional least squares, i.e. an ordinary regression of
//! `z_t` on `z_{t-1}`. For a pure AR model this agrees with the Gaussian
//! likelihood estimate up to the contribution of the first observation.

use serde::Serialize;

use crate::error::{Result, TvaError};
use crate::types::TimeSeries;

/// Minimum length of the differenced series accepted by [`fit_arima`].
pub const MIN_DIFFERENCED_LEN: usize = 10;

const MAX_DIFFERENCE: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    pub const fn new(p: usize, d: usize, q: usize) -> Self {
        Self { p, d, q }
    }

    /// ARIMA(1,1,0): first-order autoregression on first differences.
    pub const DIFFERENCED_AR1: ArimaOrder = ArimaOrder::new(1, 1, 0);

    pub fn validate(&self) -> Result<()> {
        if self.p > 1 || self.d > MAX_DIFFERENCE || self.q != 0 {
            return Err(TvaError::UnsupportedOrder {
                p: self.p,
                d: self.d,
                q: self.q,
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for ArimaOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)
    }
}

fn diff_once(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[1] - w[0]).collect()
}

fn diff_slice(values: &[f64], degree: usize) -> Vec<f64> {
    let mut out = values.to_vec();
    for _ in 0..degree {
        out = diff_once(&out);
    }
    out
}

/// Applies `degree` rounds of first differencing.
pub fn difference(s: &TimeSeries, degree: usize) -> Result<TimeSeries> {
    if degree > MAX_DIFFERENCE {
        return Err(TvaError::invalid(format!(
            "differencing degree must be at most {MAX_DIFFERENCE}, got {degree}"
        )));
    }
    if s.len() <= degree {
        return Err(TvaError::TooShort {
            needed: degree + 1,
            got: s.len(),
        });
    }
    TimeSeries::new(diff_slice(s.values(), degree), s.interval())
}

/// Inverse of first differencing: cumulative sum seeded with `first`.
///
/// `integrate(&difference(s, 1)?, s[0])` reproduces `s`.
pub fn integrate(diffs: &TimeSeries, first: f64) -> Result<TimeSeries> {
    let mut out = Vec::with_capacity(diffs.len() + 1);
    let mut acc = first;
    out.push(acc);
    for &dz in diffs.values() {
        acc += dz;
        out.push(acc);
    }
    TimeSeries::new(out, diffs.interval())
}

fn centered_autocovariances(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 == 0.0 || !c0.is_finite() {
        return Err(TvaError::ZeroVariance);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(c0);
    for k in 1..=max_lag {
        let ck: f64 = centered
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum();
        out.push(ck);
    }
    Ok(out)
}

/// Sample autocorrelations `r_1..=r_max_lag` (biased, mean-centred estimator).
pub fn acf(s: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(TvaError::invalid("max_lag must be at least 1"));
    }
    if s.len() < max_lag + 2 {
        return Err(TvaError::TooShort {
            needed: max_lag + 2,
            got: s.len(),
        });
    }
    let values = s.values();
    if values.iter().all(|&v| v == values[0]) {
        return Err(TvaError::ZeroVariance);
    }
    let cov = centered_autocovariances(values, max_lag)?;
    Ok(cov[1..].iter().map(|c| (c / cov[0]).clamp(-1.0, 1.0)).collect())
}

/// Partial autocorrelations via the Durbin-Levinson recursion on [`acf`].
pub fn pacf(s: &TimeSeries, max_lag: usize) -> Result<Vec<f64>> {
    let r = acf(s, max_lag)?;
    Ok(durbin_levinson(&r))
}

/// `r[k-1]` holds the lag-k autocorrelation; returns `phi_{k,k}` for each k.
pub(crate) fn durbin_levinson(r: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(r.len());
    let mut prev: Vec<f64> = Vec::new();
    for k in 1..=r.len() {
        let num = r[k - 1]
            - prev
                .iter()
                .enumerate()
                .map(|(j, p)| p * r[k - 2 - j])
                .sum::<f64>();
        let den = 1.0
            - prev
                .iter()
                .enumerate()
                .map(|(j, p)| p * r[j])
                .sum::<f64>();
        let phi_kk = if den.abs() < f64::EPSILON { 0.0 } else { num / den };
        let mut next: Vec<f64> = (0..k - 1)
            .map(|j| prev[j] - phi_kk * prev[k - 2 - j])
            .collect();
        next.push(phi_kk);
        out.push(phi_kk);
        prev = next;
    }
    out
}

/// Fitted ARIMA(p, d, 0) model with the state needed to forecast.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArimaModel {
    order: ArimaOrder,
    phi: f64,
    constant: f64,
    last_observations: Vec<f64>,
    residual_variance: f64,
    n_obs: usize,
}

impl ArimaModel {
    /// Assembles a model from known parameters.
    ///
    /// `last_observations` are the trailing raw values (oldest first); at
    /// least `d + p` of them are required, extra leading values are dropped.
    pub fn from_parts(
        order: ArimaOrder,
        phi: f64,
        constant: f64,
        last_observations: Vec<f64>,
        residual_variance: f64,
    ) -> Result<Self> {
        order.validate()?;
        if !(phi.is_finite() && constant.is_finite()) {
            return Err(TvaError::invalid("model parameters must be finite"));
        }
        if phi.abs() >= 1.0 {
            return Err(TvaError::NonStationary(phi));
        }
        if order.p == 0 && phi != 0.0 {
            return Err(TvaError::invalid("a p = 0 model must have phi = 0"));
        }
        if !(residual_variance.is_finite() && residual_variance >= 0.0) {
            return Err(TvaError::invalid("residual variance must be non-negative"));
        }
        let need = order.d + order.p;
        if last_observations.len() < need {
            return Err(TvaError::TooShort {
                needed: need,
                got: last_observations.len(),
            });
        }
        if last_observations.iter().any(|v| !v.is_finite()) {
            return Err(TvaError::invalid("trailing observations must be finite"));
        }
        let n_obs = last_observations.len();
        let tail = last_observations[n_obs - need..].to_vec();
        Ok(Self {
            order,
            phi,
            constant,
            last_observations: tail,
            residual_variance,
            n_obs,
        })
    }

    pub fn order(&self) -> ArimaOrder {
        self.order
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn last_observations(&self) -> &[f64] {
        &self.last_observations
    }

    pub fn residual_variance(&self) -> f64 {
        self.residual_variance
    }

    /// Number of raw observations the model was fitted (or anchored) on.
    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Same parameters, forecasting state taken from the tail of `s`.
    pub fn anchored(&self, s: &TimeSeries) -> Result<ArimaModel> {
        let need = self.order.d + self.order.p;
        if s.len() < need.max(1) {
            return Err(TvaError::TooShort {
                needed: need.max(1),
                got: s.len(),
            });
        }
        let v = s.values();
        Ok(ArimaModel {
            last_observations: v[v.len() - need..].to_vec(),
            n_obs: s.len(),
            ..self.clone()
        })
    }

    /// One-step prediction of the differenced series given its previous value.
    fn step(&self, z_prev: f64) -> f64 {
        if self.order.p == 1 {
            self.constant + self.phi * z_prev
        } else {
            self.constant
        }
    }

    pub fn forecast(&self, horizon: usize) -> Result<Vec<f64>> {
        forecast(self, horizon)
    }
}

/// Fits ARIMA(p, d, 0) by conditional least squares on the differenced series.
///
/// When the lagged differenced values have no spread (e.g. a perfect ramp),
/// the slope is unidentifiable; the model then falls back to `phi = 0` with
/// `c` equal to the mean difference, which reproduces the drift exactly.
pub fn fit_arima(s: &TimeSeries, order: ArimaOrder) -> Result<ArimaModel> {
    order.validate()?;
    let needed = MIN_DIFFERENCED_LEN + order.d;
    if s.len() < needed {
        return Err(TvaError::TooShort {
            needed,
            got: s.len(),
        });
    }
    let z = diff_slice(s.values(), order.d);
    let (phi, constant) = if order.p == 0 {
        (0.0, mean(&z))
    } else {
        css_ar1(&z)
    };
    if !(phi.is_finite() && constant.is_finite()) {
        return Err(TvaError::invalid("fit produced non-finite parameters"));
    }
    if phi.abs() >= 1.0 {
        return Err(TvaError::NonStationary(phi));
    }
    let residuals = residuals_of(&z, order.p, phi, constant);
    let residual_variance = residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64;
    let need = order.d + order.p;
    let v = s.values();
    Ok(ArimaModel {
        order,
        phi,
        constant,
        last_observations: v[v.len() - need..].to_vec(),
        residual_variance,
        n_obs: s.len(),
    })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn css_ar1(z: &[f64]) -> (f64, f64) {
    let lagged = &z[..z.len() - 1];
    let current = &z[1..];
    let mx = mean(lagged);
    let my = mean(current);
    let sxx: f64 = lagged.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lagged
        .iter()
        .zip(current)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let scale = lagged.iter().map(|x| x * x).sum::<f64>().max(1.0);
    if sxx <= 1e-24 * scale {
        return (0.0, mean(z));
    }
    let phi = sxy / sxx;
    (phi, my - phi * mx)
}

fn residuals_of(z: &[f64], p: usize, phi: f64, constant: f64) -> Vec<f64> {
    if p == 0 {
        z.iter().map(|v| v - constant).collect()
    } else {
        z.windows(2)
            .map(|w| w[1] - (constant + phi * w[0]))
            .collect()
    }
}

/// Forecasts `horizon` steps ahead on the original scale.
pub fn forecast(m: &ArimaModel, horizon: usize) -> Result<Vec<f64>> {
    if horizon < 1 {
        return Err(TvaError::invalid("forecast horizon must be at least 1"));
    }
    let d = m.order.d;
    // Last value at every differencing level 0..=d.
    let mut lasts: Vec<f64> = (0..=d)
        .map(|k| diff_slice(&m.last_observations, k).last().copied().unwrap_or(0.0))
        .collect();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        lasts[d] = m.step(lasts[d]);
        for k in (0..d).rev() {
            lasts[k] += lasts[k + 1];
        }
        out.push(lasts[0]);
    }
    Ok(out)
}

/// In-sample residual diagnostics for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub mean: f64,
    pub lag1_autocorrelation: f64,
    pub n: usize,
    /// `|lag-1 autocorrelation| > 2 / sqrt(n)`.
    pub suspect: bool,
}

/// Recomputes residuals of `m` on its fitting series `s` and checks whiteness.
pub fn check_residuals(m: &ArimaModel, s: &TimeSeries) -> Result<ResidualReport> {
    if s.len() != m.n_obs {
        return Err(TvaError::DimensionMismatch {
            expected: m.n_obs,
            got: s.len(),
        });
    }
    let v = s.values();
    let need = m.last_observations.len();
    if v[v.len() - need..] != m.last_observations[..] {
        return Err(TvaError::invalid(
            "series does not end with the model's trailing observations",
        ));
    }
    let z = diff_slice(v, m.order.d);
    let residuals = residuals_of(&z, m.order.p, m.phi, m.constant);
    let n = residuals.len();
    let mean_res = mean(&residuals);
    let centered: Vec<f64> = residuals.iter().map(|e| e - mean_res).collect();
    let c0: f64 = centered.iter().map(|e| e * e).sum();
    let scale = residuals.iter().map(|e| e * e).sum::<f64>().max(f64::MIN_POSITIVE);
    let lag1 = if c0 <= 1e-24 * scale || c0 == 0.0 {
        0.0
    } else {
        centered.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / c0
    };
    let band = 2.0 / (n as f64).sqrt();
    Ok(ResidualReport {
        mean: mean_res,
        lag1_autocorrelation: lag1,
        n,
        suspect: lag1.abs() > band,
    })
}
