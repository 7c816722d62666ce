//! Standardisation and angle encoding ahead of the quantum circuit.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::EventDataset;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("need at least 2 events to fit a scaler, got {0}")]
    TooFewEvents(usize),
    #[error("expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Per-feature mean and sample standard deviation (denominator `n - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features whose sample std was zero; their `std` entry is replaced by 1.
    #[serde(default)]
    pub degenerate: Vec<usize>,
}

impl Scaler {
    pub fn feature_count(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>, PreprocessError> {
        self.check(x)?;
        Ok(x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), w)| (v - m) / w).collect())
    }

    fn check(&self, x: &[f64]) -> Result<(), PreprocessError> {
        if x.len() != self.mean.len() {
            return Err(PreprocessError::DimensionMismatch { expected: self.mean.len(), found: x.len() });
        }
        Ok(())
    }
}

pub fn fit_scaler(dataset: &EventDataset) -> Result<Scaler, PreprocessError> {
    let rows: Vec<&[f64]> = dataset.events().iter().map(|e| e.features.as_slice()).collect();
    fit_scaler_rows(&rows, dataset.feature_count())
}

pub fn fit_scaler_rows(rows: &[&[f64]], p: usize) -> Result<Scaler, PreprocessError> {
    let n = rows.len();
    if n < 2 {
        return Err(PreprocessError::TooFewEvents(n));
    }
    let mut mean = vec![0.0; p];
    for r in rows {
        if r.len() != p {
            return Err(PreprocessError::DimensionMismatch { expected: p, found: r.len() });
        }
        for (m, v) in mean.iter_mut().zip(*r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut std = vec![0.0; p];
    for r in rows {
        for ((s, v), m) in std.iter_mut().zip(*r).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut degenerate = Vec::new();
    for (j, s) in std.iter_mut().enumerate() {
        *s = (*s / (n - 1) as f64).sqrt();
        if *s == 0.0 {
            degenerate.push(j);
            *s = 1.0;
        }
    }
    if !degenerate.is_empty() {
        log::warn!("degenerate features with zero variance: {degenerate:?}");
    }
    Ok(Scaler { mean, std, degenerate })
}

/// `2π·tanh(((x − μ)/w)/3)` elementwise; always strictly inside `(−2π, 2π)`.
pub fn encode_angles(x: &[f64], scaler: &Scaler) -> Result<Vec<f64>, PreprocessError> {
    Ok(scaler.standardize(x)?.into_iter().map(angle_of).collect())
}

#[inline]
pub fn angle_of(standardized: f64) -> f64 {
    let a = TAU * (standardized / 3.0).tanh();
    // tanh saturates to exactly 1.0 in floating point for large inputs
    if a.abs() >= TAU {
        a.signum() * TAU.next_down()
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TradeEvent;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> EventDataset {
        let events = values
            .iter()
            .enumerate()
            .map(|(i, &v)| TradeEvent::new(i as i64, i as u64, vec![v], None))
            .collect();
        EventDataset::new(1, events, None, "c").unwrap()
    }

    #[test]
    fn two_point_column() {
        let s = fit_scaler(&column(&[-1.0, 1.0])).unwrap();
        assert_eq!(s.mean, vec![0.0]);
        assert!((s.std[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_column_flagged() {
        let s = fit_scaler(&column(&[0.3, 0.3, 0.3])).unwrap();
        assert_eq!(s.degenerate, vec![0]);
        assert_eq!(s.std, vec![1.0]);
        assert_eq!(encode_angles(&[0.3], &s).unwrap(), vec![0.0]);
    }

    #[test]
    fn refit_on_standardized_is_identity() {
        let vals: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.13 - 0.4).collect();
        let s = fit_scaler(&column(&vals)).unwrap();
        let z: Vec<f64> = vals.iter().map(|&v| s.standardize(&[v]).unwrap()[0]).collect();
        let s2 = fit_scaler(&column(&z)).unwrap();
        assert!(s2.mean[0].abs() < 1e-12);
        assert!((s2.std[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_values() {
        let s = Scaler { mean: vec![0.5], std: vec![2.0], degenerate: vec![] };
        assert_eq!(encode_angles(&[0.5], &s).unwrap(), vec![0.0]);
        // x̃ = 3
        let a = encode_angles(&[6.5], &s).unwrap()[0];
        assert!((a - TAU * 1f64.tanh()).abs() < 1e-14);
        assert!((a - 4.785_237_210_735_1).abs() < 1e-12);
        assert!(angle_of(1e6) < TAU);
        assert!(angle_of(-1e6) > -TAU);
        assert!(matches!(
            encode_angles(&[1.0, 2.0], &s),
            Err(PreprocessError::DimensionMismatch { expected: 1, found: 2 })
        ));
        assert_eq!(fit_scaler(&column(&[1.0])), Err(PreprocessError::TooFewEvents(1)));
    }

    proptest! {
        #[test]
        fn angles_bounded_odd_monotone(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            prop_assert!(angle_of(a).abs() < TAU);
            prop_assert_eq!(angle_of(-a), -angle_of(a));
            if a < b {
                prop_assert!(angle_of(a) <= angle_of(b));
            }
        }
    }
}
