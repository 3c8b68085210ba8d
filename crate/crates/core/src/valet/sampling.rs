use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, TvaError};
use crate::exec::run_seed;

/// Bin width of the overall-cost histogram.
pub const HISTOGRAM_BIN_WIDTH: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LatencyDistribution {
    /// Gaussian, resampled on negative draws.
    Normal { mean: f64, sd: f64 },
    /// Lognormal whose mean and sd equal the given values.
    PositiveSkew { mean: f64, sd: f64 },
}

impl LatencyDistribution {
    fn moments(self) -> (f64, f64) {
        match self {
            LatencyDistribution::Normal { mean, sd } | LatencyDistribution::PositiveSkew { mean, sd } => {
                (mean, sd)
            }
        }
    }

    /// `(mu, sigma)` of the moment-matched lognormal:
    /// `sigma^2 = ln(1 + (sd/mean)^2)`, `mu = ln(mean) - sigma^2 / 2`.
    pub fn lognormal_parameters(mean: f64, sd: f64) -> (f64, f64) {
        let s2 = (1.0 + (sd / mean).powi(2)).ln();
        (mean.ln() - s2 / 2.0, s2.sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TacticProfile {
    pub name: String,
    pub cost_per_unit_latency: f64,
    pub latency: LatencyDistribution,
}

impl TacticProfile {
    pub fn new(name: impl Into<String>, cost_per_unit_latency: f64, latency: LatencyDistribution) -> Result<Self> {
        let p = Self {
            name: name.into(),
            cost_per_unit_latency,
            latency,
        };
        p.validate()?;
        Ok(p)
    }

    /// Cheap tactic with positively skewed latency (cost 5, mean 3, sd 0.5).
    pub fn table_a() -> Self {
        Self {
            name: "A".into(),
            cost_per_unit_latency: 5.0,
            latency: LatencyDistribution::PositiveSkew { mean: 3.0, sd: 0.5 },
        }
    }

    /// Expensive tactic with normal latency (cost 7, mean 3, sd 0.5).
    pub fn table_b() -> Self {
        Self {
            name: "B".into(),
            cost_per_unit_latency: 7.0,
            latency: LatencyDistribution::Normal { mean: 3.0, sd: 0.5 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (mean, sd) = self.latency.moments();
        if !(mean.is_finite() && mean > 0.0) {
            return Err(TvaError::invalid(format!("{}: mean latency must be positive", self.name)));
        }
        if !(sd.is_finite() && sd > 0.0) {
            return Err(TvaError::invalid(format!("{}: latency sd must be positive", self.name)));
        }
        if !(self.cost_per_unit_latency.is_finite() && self.cost_per_unit_latency >= 0.0) {
            return Err(TvaError::invalid(format!("{}: cost must be non-negative", self.name)));
        }
        Ok(())
    }
}

/// Draws `n` latencies from the profile's distribution.
pub fn sample_latency(p: &TacticProfile, seed: u64, n: usize) -> Result<Vec<f64>> {
    p.validate()?;
    if n < 1 {
        return Err(TvaError::invalid("sample size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match p.latency {
        LatencyDistribution::Normal { mean, sd } => {
            let dist = Normal::new(mean, sd).map_err(|e| TvaError::invalid(e.to_string()))?;
            (0..n)
                .map(|_| loop {
                    let x = dist.sample(&mut rng);
                    if x >= 0.0 {
                        break x;
                    }
                })
                .collect()
        }
        LatencyDistribution::PositiveSkew { mean, sd } => {
            let (mu, sigma) = LatencyDistribution::lognormal_parameters(mean, sd);
            let dist = LogNormal::new(mu, sigma).map_err(|e| TvaError::invalid(e.to_string()))?;
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        }
    };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub start: f64,
    pub end: f64,
    pub count_a: usize,
    pub count_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rq1Result {
    pub latencies_a: Vec<f64>,
    pub latencies_b: Vec<f64>,
    pub costs_a: Vec<f64>,
    pub costs_b: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
}

/// Samples each tactic's latency `n_runs` times and multiplies by its cost.
pub fn run_rq1_simulation(
    a: &TacticProfile,
    b: &TacticProfile,
    n_runs: usize,
    seed: u64,
) -> Result<Rq1Result> {
    let latencies_a = sample_latency(a, run_seed(seed, 0), n_runs)?;
    let latencies_b = sample_latency(b, run_seed(seed, 1), n_runs)?;
    let costs_a: Vec<f64> = latencies_a.iter().map(|l| l * a.cost_per_unit_latency).collect();
    let costs_b: Vec<f64> = latencies_b.iter().map(|l| l * b.cost_per_unit_latency).collect();

    let max = costs_a.iter().chain(&costs_b).copied().fold(0.0, f64::max);
    let n_bins = ((max / HISTOGRAM_BIN_WIDTH).floor() as usize) + 1;
    let mut histogram: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            start: i as f64 * HISTOGRAM_BIN_WIDTH,
            end: (i + 1) as f64 * HISTOGRAM_BIN_WIDTH,
            count_a: 0,
            count_b: 0,
        })
        .collect();
    let bin = |c: f64| ((c / HISTOGRAM_BIN_WIDTH).floor() as usize).min(n_bins - 1);
    for &c in &costs_a {
        histogram[bin(c)].count_a += 1;
    }
    for &c in &costs_b {
        histogram[bin(c)].count_b += 1;
    }
    Ok(Rq1Result {
        latencies_a,
        latencies_b,
        costs_a,
        costs_b,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(v: &[f64]) -> (f64, f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        let skew = v.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n / var.powf(1.5);
        (m, var.sqrt(), skew)
    }

    #[test]
    fn lognormal_moment_matching() {
        let (mu, sigma) = LatencyDistribution::lognormal_parameters(3.0, 0.5);
        assert!((sigma - 0.16553).abs() < 1e-5);
        assert!((mu - 1.08491).abs() < 1e-5);
        // Lognormal moments recovered from the parameters.
        let mean = (mu + sigma * sigma / 2.0).exp();
        let sd = mean * ((sigma * sigma).exp() - 1.0).sqrt();
        assert!((mean - 3.0).abs() < 1e-12);
        assert!((sd - 0.5).abs() < 1e-12);
    }

    #[test]
    fn normal_sample_moments() {
        let v = sample_latency(&TacticProfile::table_b(), 1, 10_000).unwrap();
        let (m, sd, _) = moments(&v);
        assert!((m - 3.0).abs() < 0.02, "{m}");
        assert!((sd - 0.5).abs() < 0.02, "{sd}");
        assert!(v.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn skewed_sample_moments() {
        let v = sample_latency(&TacticProfile::table_a(), 2, 10_000).unwrap();
        let (m, _, skew) = moments(&v);
        assert!((m - 3.0).abs() < 0.02, "{m}");
        assert!(skew > 0.0);
    }

    #[test]
    fn profile_validation() {
        let bad = TacticProfile::new("x", 1.0, LatencyDistribution::Normal { mean: 3.0, sd: 0.0 });
        assert!(bad.is_err());
        assert!(TacticProfile::new("x", 1.0, LatencyDistribution::PositiveSkew { mean: -1.0, sd: 1.0 }).is_err());
        assert!(sample_latency(&TacticProfile::table_a(), 0, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_latency(&TacticProfile::table_a(), 9, 100).unwrap();
        assert_eq!(a, sample_latency(&TacticProfile::table_a(), 9, 100).unwrap());
    }

    #[test]
    fn hundred_simulations() {
        let r = run_rq1_simulation(&TacticProfile::table_a(), &TacticProfile::table_b(), 100, 42).unwrap();
        assert_eq!(r.costs_a.len(), 100);
        assert_eq!(r.costs_b.len(), 100);
        assert_eq!(r.histogram.iter().map(|b| b.count_a).sum::<usize>(), 100);
        assert_eq!(r.histogram.iter().map(|b| b.count_b).sum::<usize>(), 100);
        assert_eq!(r.histogram[0].start, 0.0);
        assert_eq!(r.histogram[0].end, 5.0);
    }

    #[test]
    fn near_deterministic_costs() {
        let mut a = TacticProfile::table_a();
        a.latency = LatencyDistribution::PositiveSkew { mean: 3.0, sd: 1e-9 };
        let mut b = TacticProfile::table_b();
        b.latency = LatencyDistribution::Normal { mean: 3.0, sd: 1e-9 };
        let r = run_rq1_simulation(&a, &b, 50, 1).unwrap();
        assert!(r.costs_a.iter().all(|c| (c - 15.0).abs() < 1e-6));
        assert!(r.costs_b.iter().all(|c| (c - 21.0).abs() < 1e-6));
    }

    #[test]
    fn overall_cost_spread_follows_cost_times_latency_sd() {
        // With both latency sds pinned at 0.5, overall-cost sd is 0.5 * cost:
        // 2.5 for A and 3.5 for B.
        let r = run_rq1_simulation(&TacticProfile::table_a(), &TacticProfile::table_b(), 10_000, 42).unwrap();
        let (_, sd_a, skew_a) = moments(&r.costs_a);
        let (_, sd_b, skew_b) = moments(&r.costs_b);
        assert!((sd_a - 2.5).abs() < 0.1, "{sd_a}");
        assert!((sd_b - 3.5).abs() < 0.1, "{sd_b}");
        assert!(skew_a > skew_b);
    }

    #[test]
    fn sample_means_converge() {
        let n = 100_000;
        for p in [TacticProfile::table_a(), TacticProfile::table_b()] {
            let v = sample_latency(&p, 5, n).unwrap();
            let mean = v.iter().sum::<f64>() / n as f64;
            let bound = 3.0 * 0.5 / (n as f64).sqrt() * 1.5;
            assert!((mean - 3.0).abs() < bound, "{}: {mean}", p.name);
        }
    }
}
