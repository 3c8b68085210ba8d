//! Forecast and prediction error metrics.

use serde::Serialize;

use crate::error::{Result, TvaError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScorePair {
    pub rmse: f64,
    pub mae: f64,
}

impl ScorePair {
    pub fn score(predicted: &[f64], actual: &[f64]) -> Result<Self> {
        Ok(Self {
            rmse: rmse(predicted, actual)?,
            mae: mae(predicted, actual)?,
        })
    }
}

fn check(predicted: &[f64], actual: &[f64]) -> Result<()> {
    if predicted.len() != actual.len() {
        return Err(TvaError::DimensionMismatch {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(TvaError::Empty("metric inputs"));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check(predicted, actual)?;
    let sse: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(y, t)| (y - t) * (y - t))
        .sum();
    Ok((sse / actual.len() as f64).sqrt())
}

/// Mean absolute error.
pub fn mae(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    check(predicted, actual)?;
    let sae: f64 = predicted.iter().zip(actual).map(|(y, t)| (y - t).abs()).sum();
    Ok(sae / actual.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_vectors_score_zero() {
        assert_eq!(rmse(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 0.0);
        assert_eq!(mae(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_values() {
        // (9 + 16) / 2 = 12.5
        assert_eq!(rmse(&[0., 0.], &[3., 4.]).unwrap(), 12.5f64.sqrt());
        assert!((rmse(&[0., 0.], &[3., 4.]).unwrap() - 3.5355).abs() < 1e-4);
        assert_eq!(mae(&[0., 0.], &[3., 4.]).unwrap(), 3.5);
        assert_eq!(rmse(&[2.], &[5.]).unwrap(), 3.0);
        assert_eq!(mae(&[2.], &[5.]).unwrap(), 3.0);
    }

    #[test]
    fn rejects_mismatch_and_empty() {
        assert!(rmse(&[1.], &[1., 2.]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..64)) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = rmse(&p, &a).unwrap();
            let m = mae(&p, &a).unwrap();
            prop_assert!(r + 1e-9 * r.max(1.0) >= m);
        }

        #[test]
        fn symmetric_and_shift_invariant(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..64),
            shift in -100f64..100.0,
        ) {
            let (p, a): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert_eq!(rmse(&p, &a).unwrap(), rmse(&a, &p).unwrap());
            prop_assert_eq!(mae(&p, &a).unwrap(), mae(&a, &p).unwrap());
            let ps: Vec<f64> = p.iter().map(|v| v + shift).collect();
            let as_: Vec<f64> = a.iter().map(|v| v + shift).collect();
            prop_assert!((rmse(&ps, &as_).unwrap() - rmse(&p, &a).unwrap()).abs() < 1e-9);
            prop_assert!((mae(&ps, &as_).unwrap() - mae(&p, &a).unwrap()).abs() < 1e-9);
        }
    }
}
