//! Multiple regression for run-time tactic latency and cost prediction, with
//! the comparison predictors used by the evaluation harness.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, TvaError};
use crate::types::{AttributeKind, Tactic};

/// Condition number of `X'X` above which the solver switches to ridge.
pub const MAX_CONDITION: f64 = 1e12;
/// Ridge strength relative to the mean eigenvalue of `X'X`.
pub const RIDGE_FALLBACK_SCALE: f64 = 1e-8;

pub const DEFAULT_BRR_ALPHA: f64 = 1.0;
pub const DEFAULT_BRR_BETA: f64 = 1.0;
pub const DEFAULT_BRR_ITERS: usize = 10;

/// Observation vectors, one per row, with a leading intercept column of ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    column_names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(rows: Vec<Vec<f64>>, column_names: Vec<String>) -> Result<Self> {
        let width = column_names.len();
        if width == 0 {
            return Err(TvaError::invalid("design matrix needs at least one column"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(TvaError::DimensionMismatch {
                    expected: width,
                    got: row.len(),
                });
            }
            if row[0] != 1.0 {
                return Err(TvaError::invalid(format!(
                    "row {i}: first column must be the intercept 1"
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(TvaError::invalid(format!("row {i}: non-finite entry")));
            }
        }
        let n = rows.len();
        let x = DMatrix::from_fn(n, width, |r, c| rows[r][c]);
        Ok(Self { x, column_names })
    }

    /// Prepends the intercept column to raw feature rows.
    pub fn with_intercept(features: Vec<Vec<f64>>, feature_names: Vec<String>) -> Result<Self> {
        let rows = features
            .into_iter()
            .map(|f| std::iter::once(1.0).chain(f).collect())
            .collect();
        let names = std::iter::once("intercept".to_string())
            .chain(feature_names)
            .collect();
        Self::new(rows, names)
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            x: self.x.select_rows(idx),
            column_names: self.column_names.clone(),
        }
    }
}

/// Observed responses aligned with the rows of a [`DesignMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector(Vec<f64>);

impl ResponseVector {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.iter().any(|v| !v.is_finite()) {
            return Err(TvaError::invalid("responses must be finite"));
        }
        Ok(Self(t))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> ResponseVector {
        ResponseVector(idx.iter().map(|&i| self.0[i]).collect())
    }

    fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionModel {
    weights: Vec<f64>,
    ridge_lambda: f64,
    training_error: f64,
}

impl RegressionModel {
    /// Model with fixed weights (no training data).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
            return Err(TvaError::invalid("weights must be finite and non-empty"));
        }
        Ok(Self {
            weights,
            ridge_lambda: 0.0,
            training_error: 0.0,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Ridge term used at solve time; 0 for a plain least-squares fit.
    pub fn ridge_lambda(&self) -> f64 {
        self.ridge_lambda
    }

    /// Half sum of squared training residuals at the fitted weights.
    pub fn training_error(&self) -> f64 {
        self.training_error
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }
}

fn check_dims(x: &DesignMatrix, t: &ResponseVector) -> Result<()> {
    if x.n_rows() != t.len() {
        return Err(TvaError::DimensionMismatch {
            expected: x.n_rows(),
            got: t.len(),
        });
    }
    Ok(())
}

/// `E(w) = 1/2 * sum_n (w'x_n - t_n)^2`.
pub fn error_function(x: &DesignMatrix, t: &ResponseVector, w: &[f64]) -> Result<f64> {
    check_dims(x, t)?;
    if w.len() != x.n_cols() {
        return Err(TvaError::DimensionMismatch {
            expected: x.n_cols(),
            got: w.len(),
        });
    }
    let w = DVector::from_column_slice(w);
    let resid = x.matrix() * w - t.as_dvector();
    Ok(0.5 * resid.norm_squared())
}

/// Least-squares weights `w* = (X'X)^{-1} X't`.
///
/// Well-conditioned problems are solved through a QR factorisation of `X`.
/// When `X'X` is singular or its condition number exceeds [`MAX_CONDITION`],
/// the solve is retried on `X'X + lambda I` with
/// `lambda = 1e-8 * trace(X'X) / M`, and `lambda` is recorded on the model.
pub fn fit_mra(x: &DesignMatrix, t: &ResponseVector) -> Result<RegressionModel> {
    check_dims(x, t)?;
    let (n, m) = (x.n_rows(), x.n_cols());
    if n < m {
        return Err(TvaError::TooShort { needed: m, got: n });
    }
    let xm = x.matrix();
    let gram = xm.transpose() * xm;
    let trace = gram.trace();
    if trace == 0.0 {
        return Err(TvaError::invalid("design matrix is all zeros"));
    }
    let eig = SymmetricEigen::new(gram.clone());
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    let ill_conditioned = lmin <= 0.0 || lmax / lmin > MAX_CONDITION;

    let tv = t.as_dvector();
    let (weights, ridge_lambda) = if !ill_conditioned {
        let qr = xm.clone().qr();
        let qt_t = qr.q().transpose() * &tv;
        let w = qr
            .r()
            .solve_upper_triangular(&qt_t)
            .ok_or_else(|| TvaError::Singular("triangular factor is singular".into()))?;
        (w, 0.0)
    } else {
        let lambda = RIDGE_FALLBACK_SCALE * trace / m as f64;
        let mut a = gram;
        for i in 0..m {
            a[(i, i)] += lambda;
        }
        let rhs = xm.transpose() * &tv;
        let w = a
            .cholesky()
            .ok_or_else(|| TvaError::Singular("regularised system is not positive definite".into()))?
            .solve(&rhs);
        (w, lambda)
    };
    let weights: Vec<f64> = weights.iter().copied().collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(TvaError::Singular("solution is not finite".into()));
    }
    let training_error = error_function(x, t, &weights)?;
    Ok(RegressionModel {
        weights,
        ridge_lambda,
        training_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    /// Prediction clamped at zero.
    pub value: f64,
    /// Unclamped linear prediction.
    pub raw: f64,
}

/// Evaluates `w'x`; `x` must include the leading intercept entry.
pub fn predict(m: &RegressionModel, x: &[f64]) -> Result<Prediction> {
    if x.len() != m.weights.len() {
        return Err(TvaError::DimensionMismatch {
            expected: m.weights.len(),
            got: x.len(),
        });
    }
    if x[0] != 1.0 {
        return Err(TvaError::invalid("feature vector must start with the intercept 1"));
    }
    let raw: f64 = m.weights.iter().zip(x).map(|(w, v)| w * v).sum();
    Ok(Prediction {
        value: raw.max(0.0),
        raw,
    })
}

/// Bayesian ridge regression with evidence-maximising hyperparameter updates.
///
/// The posterior mean is `m = (alpha I + beta X'X)^{-1} beta X't`. Each of the
/// `iters` updates sets `gamma = sum_i l_i / (alpha + l_i)` over eigenvalues
/// `l_i` of `beta X'X`, then `alpha = gamma / |m|^2` and
/// `beta = (N - gamma) / sum(residual^2)`.
pub fn fit_bayesian_ridge(
    x: &DesignMatrix,
    t: &ResponseVector,
    alpha0: f64,
    beta0: f64,
    iters: usize,
) -> Result<RegressionModel> {
    check_dims(x, t)?;
    if !(alpha0.is_finite() && alpha0 > 0.0 && beta0.is_finite() && beta0 > 0.0) {
        return Err(TvaError::invalid("alpha and beta must be positive"));
    }
    let n = x.n_rows();
    if n == 0 {
        return Err(TvaError::Empty("training rows"));
    }
    let xm = x.matrix();
    let gram = xm.transpose() * xm;
    let eig = SymmetricEigen::new(gram);
    let v = eig.eigenvectors;
    let evals: Vec<f64> = eig.eigenvalues.iter().map(|e| e.max(0.0)).collect();
    let tv = t.as_dvector();
    // X't in the eigenbasis of X'X.
    let proj = v.transpose() * (xm.transpose() * &tv);

    // The posterior mean depends on alpha/beta only through their ratio.
    let posterior_mean = |alpha: f64, beta: f64| -> DVector<f64> {
        let ratio = alpha / beta;
        let scaled = DVector::from_iterator(
            evals.len(),
            proj.iter().zip(&evals).map(|(p, e)| p / (ratio + e)),
        );
        &v * scaled
    };

    let (mut alpha, mut beta) = (alpha0, beta0);
    let mut mean = posterior_mean(alpha, beta);
    for _ in 0..iters {
        let ratio = alpha / beta;
        let gamma: f64 = evals.iter().map(|e| e / (ratio + e)).sum();
        let norm2 = mean.norm_squared();
        let rss = (xm * &mean - &tv).norm_squared();
        if norm2 > 0.0 {
            alpha = (gamma / norm2).max(f64::MIN_POSITIVE);
        }
        if (n as f64) - gamma > 0.0 {
            beta = ((n as f64 - gamma) / rss.max(1e-300)).min(1e300);
        }
        mean = posterior_mean(alpha, beta);
    }
    let weights: Vec<f64> = mean.iter().copied().collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(TvaError::Singular("posterior mean is not finite".into()));
    }
    let training_error = error_function(x, t, &weights)?;
    Ok(RegressionModel {
        weights,
        ridge_lambda: alpha / beta,
        training_error,
    })
}

/// Running-mean predictor: the average of all previous observations.
pub fn baseline_mean(history: &[f64]) -> Result<f64> {
    if history.is_empty() {
        return Err(TvaError::Empty("history"));
    }
    Ok(history.iter().sum::<f64>() / history.len() as f64)
}

/// Static predictor: the tactic's predefined attribute, ignoring observations.
pub fn baseline_static(t: &Tactic, kind: AttributeKind) -> f64 {
    t.static_value(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn dm(rows: &[&[f64]]) -> DesignMatrix {
        let m = rows[0].len();
        DesignMatrix::new(
            rows.iter().map(|r| r.to_vec()).collect(),
            (0..m).map(|i| format!("x{i}")).collect(),
        )
        .unwrap()
    }

    fn rv(t: &[f64]) -> ResponseVector {
        ResponseVector::new(t.to_vec()).unwrap()
    }

    fn random_problem(n: usize, truth: &[f64], sd: f64, seed: u64) -> (DesignMatrix, ResponseVector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sd).unwrap();
        let m = truth.len();
        let mut rows = Vec::with_capacity(n);
        let mut t = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = vec![1.0];
            row.extend((1..m).map(|_| rng.random_range(-2.0..2.0)));
            let y: f64 = row.iter().zip(truth).map(|(a, b)| a * b).sum();
            t.push(y + if sd > 0.0 { noise.sample(&mut rng) } else { 0.0 });
            rows.push(row);
        }
        let names = (0..m).map(|i| format!("x{i}")).collect();
        (DesignMatrix::new(rows, names).unwrap(), rv(&t))
    }

    #[test]
    fn error_function_examples() {
        assert_eq!(error_function(&dm(&[&[1.], &[1.]]), &rv(&[3., 5.]), &[4.]).unwrap(), 1.0);
        let x = dm(&[&[1., 2.], &[1., 3.]]);
        assert_eq!(error_function(&x, &rv(&[5., 7.]), &[1., 2.]).unwrap(), 0.0);
        assert!(error_function(&x, &rv(&[5., 7.]), &[1.]).is_err());
        assert!(error_function(&x, &rv(&[5.]), &[1., 2.]).is_err());
    }

    #[test]
    fn exact_linear_fit() {
        let m = fit_mra(&dm(&[&[1., 0.], &[1., 1.], &[1., 2.]]), &rv(&[1., 3., 5.])).unwrap();
        assert!((m.weights()[0] - 1.0).abs() < 1e-10);
        assert!((m.weights()[1] - 2.0).abs() < 1e-10);
        assert_eq!(m.ridge_lambda(), 0.0);
        assert!(m.training_error() < 1e-20);
    }

    #[test]
    fn collinear_design_takes_ridge_fallback() {
        let x = dm(&[&[1., 1., 1.], &[1., 2., 2.], &[1., 3., 3.], &[1., 4., 4.]]);
        let m = fit_mra(&x, &rv(&[2., 4., 6., 8.])).unwrap();
        assert!(m.ridge_lambda() > 0.0);
        // Predictions are still accurate along the data.
        let p = predict(&m, &[1., 5., 5.]).unwrap();
        assert!((p.raw - 10.0).abs() < 1e-4);
    }

    #[test]
    fn recovers_noisy_weights() {
        let truth = [0.5, -1.0, 2.0, 3.0];
        let (x, t) = random_problem(200, &truth, 0.01, 7);
        let m = fit_mra(&x, &t).unwrap();
        for (w, w0) in m.weights().iter().zip(truth) {
            assert!((w - w0).abs() < 0.01, "{w} vs {w0}");
        }
    }

    #[test]
    fn fit_rejects_underdetermined() {
        assert!(matches!(
            fit_mra(&dm(&[&[1., 2., 3.]]), &rv(&[1.])),
            Err(TvaError::TooShort { .. })
        ));
    }

    #[test]
    fn predict_examples() {
        let m = RegressionModel::from_weights(vec![1., 2.]).unwrap();
        assert_eq!(predict(&m, &[1., 3.]).unwrap().value, 7.0);
        let z = RegressionModel::from_weights(vec![0.; 3]).unwrap();
        assert_eq!(predict(&z, &[1., 9., -4.]).unwrap().value, 0.0);
        let neg = RegressionModel::from_weights(vec![-5., 1.]).unwrap();
        let p = predict(&neg, &[1., 2.]).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.raw, -3.0);
        assert!(predict(&m, &[1.]).is_err());
    }

    #[test]
    fn brr_vanishing_prior_matches_mra() {
        let (x, t) = random_problem(100, &[1.0, 2.0, -0.5], 0.1, 3);
        let mra = fit_mra(&x, &t).unwrap();
        let brr = fit_bayesian_ridge(&x, &t, 1e-12, 1.0, 0).unwrap();
        for (a, b) in mra.weights().iter().zip(brr.weights()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn brr_dominant_prior_shrinks_to_zero() {
        let (x, t) = random_problem(100, &[1.0, 2.0, -0.5], 0.1, 3);
        let brr = fit_bayesian_ridge(&x, &t, 1e12, 1.0, 0).unwrap();
        assert!(brr.weights().iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn brr_recovers_noiseless_weights() {
        let truth = [0.5, -1.0, 2.0];
        let (x, t) = random_problem(60, &truth, 0.0, 5);
        let brr = fit_bayesian_ridge(&x, &t, DEFAULT_BRR_ALPHA, DEFAULT_BRR_BETA, 5).unwrap();
        for (w, w0) in brr.weights().iter().zip(truth) {
            assert!((w - w0).abs() < 1e-4, "{w} vs {w0}");
        }
    }

    #[test]
    fn brr_rejects_bad_hyperparameters() {
        let (x, t) = random_problem(10, &[1.0, 1.0], 0.1, 1);
        assert!(fit_bayesian_ridge(&x, &t, 0.0, 1.0, 1).is_err());
        assert!(fit_bayesian_ridge(&x, &t, 1.0, -1.0, 1).is_err());
    }

    #[test]
    fn baselines() {
        assert_eq!(baseline_mean(&[3., 5.]).unwrap(), 4.0);
        assert_eq!(baseline_mean(&[7.]).unwrap(), 7.0);
        assert_eq!(baseline_mean(&[2., 4., 6., 8.]).unwrap(), 5.0);
        assert!(baseline_mean(&[]).is_err());

        let a = Tactic::new("A", 2.0, 5.0, vec!["lag1".into()]).unwrap();
        assert_eq!(baseline_static(&a, AttributeKind::Latency), 2.0);
        assert_eq!(baseline_static(&a, AttributeKind::Cost), 5.0);
        assert_eq!(baseline_static(&a, AttributeKind::Cost), 5.0);
    }

    /// Explicit (X'X)^{-1} X't by cofactor expansion, for M <= 3.
    fn cofactor_solve(x: &DesignMatrix, t: &ResponseVector) -> Vec<f64> {
        let m = x.n_cols();
        let mut g = vec![vec![0.0; m]; m];
        let mut b = vec![0.0; m];
        for r in 0..x.n_rows() {
            let row = x.row(r);
            for i in 0..m {
                b[i] += row[i] * t.values()[r];
                for j in 0..m {
                    g[i][j] += row[i] * row[j];
                }
            }
        }
        fn det(a: &[Vec<f64>]) -> f64 {
            match a.len() {
                1 => a[0][0],
                _ => (0..a.len())
                    .map(|c| {
                        let minor: Vec<Vec<f64>> = a[1..]
                            .iter()
                            .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect())
                            .collect();
                        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                        sign * a[0][c] * det(&minor)
                    })
                    .sum(),
            }
        }
        let d = det(&g);
        let cof = |i: usize, j: usize| -> f64 {
            if m == 1 {
                return 1.0;
            }
            let minor: Vec<Vec<f64>> = g
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != i)
                .map(|(_, row)| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * det(&minor)
        };
        (0..m)
            .map(|i| (0..m).map(|j| cof(j, i) / d * b[j]).sum())
            .collect()
    }

    #[test]
    fn small_problems_match_cofactor_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let m = rng.random_range(1..=3);
            let n = rng.random_range(m..=6);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| std::iter::once(1.0).chain((1..m).map(|_| rng.random_range(-3.0..3.0))).collect())
                .collect();
            let t: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let x = DesignMatrix::new(rows, (0..m).map(|i| format!("x{i}")).collect()).unwrap();
            let t = rv(&t);
            let fit = fit_mra(&x, &t).unwrap();
            if fit.ridge_lambda() > 0.0 {
                continue;
            }
            for (a, b) in fit.weights().iter().zip(cofactor_solve(&x, &t)) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    proptest! {
        #[test]
        fn fit_satisfies_normal_equations(seed in 0u64..1000, n in 5usize..40) {
            let (x, t) = random_problem(n, &[1.0, -2.0, 0.5], 0.5, seed);
            let fit = fit_mra(&x, &t).unwrap();
            prop_assume!(fit.ridge_lambda() == 0.0);
            let xm = x.matrix();
            let w = DVector::from_column_slice(fit.weights());
            let xtt = xm.transpose() * t.as_dvector();
            let lhs = xm.transpose() * xm * w;
            let err = (lhs - &xtt).amax();
            prop_assert!(err < 1e-8 * (1.0 + xtt.amax()));
        }

        #[test]
        fn fit_is_optimal_against_perturbations(seed in 0u64..200) {
            let (x, t) = random_problem(30, &[0.3, 1.0, -1.0, 2.0], 0.3, seed);
            let fit = fit_mra(&x, &t).unwrap();
            let best = error_function(&x, &t, fit.weights()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100 {
                let w: Vec<f64> = fit.weights().iter().map(|w| w + rng.random_range(-0.1..0.1)).collect();
                prop_assert!(best <= error_function(&x, &t, &w).unwrap());
            }
        }

        #[test]
        fn prediction_is_affine_in_features(
            w in prop::collection::vec(-5f64..5.0, 3),
            x1 in prop::collection::vec(-5f64..5.0, 2),
            x2 in prop::collection::vec(-5f64..5.0, 2),
            a in 0f64..1.0,
        ) {
            let m = RegressionModel::from_weights(w).unwrap();
            let v1 = [1.0, x1[0], x1[1]];
            let v2 = [1.0, x2[0], x2[1]];
            let mix = [1.0, a * x1[0] + (1.0 - a) * x2[0], a * x1[1] + (1.0 - a) * x2[1]];
            let expected = a * predict(&m, &v1).unwrap().raw + (1.0 - a) * predict(&m, &v2).unwrap().raw;
            prop_assert!((predict(&m, &mix).unwrap().raw - expected).abs() < 1e-9);
        }
    }
}
