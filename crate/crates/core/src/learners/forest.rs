//! Random forest: fully grown classification trees on bootstrap samples with
//! `⌊√p⌋` candidate features per split; the probability is the mean of the
//! trees' leaf class frequencies.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{self, BuildConfig, Impurity, Objective, Tree};
use super::{LearnError, Matrix};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
    /// Same split rule as `Entropy`.
    LogLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub criterion: Criterion,
    pub n_estimators: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
}

impl Default for RfParams {
    fn default() -> Self {
        Self { criterion: Criterion::Gini, n_estimators: 100, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<Tree>,
}

impl RfModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn max_features(p: usize) -> usize {
    ((p as f64).sqrt().floor() as usize).max(1)
}

pub fn fit(params: &RfParams, x: &Matrix, y: &[u8], seed_value: u64) -> Result<RfModel, LearnError> {
    if params.n_estimators == 0 {
        return Err(LearnError::InvalidParams("n_estimators must be positive".into()));
    }
    let impurity = match params.criterion {
        Criterion::Gini => Impurity::Gini,
        Criterion::Entropy | Criterion::LogLoss => Impurity::Entropy,
    };
    let cfg = BuildConfig {
        objective: Objective::Classification(impurity),
        max_depth: params.max_depth,
        max_features: Some(max_features(x.cols())),
    };
    let n = x.rows();
    let sorted = tree::presort(x);
    let trees = (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::derived_rng(seed_value, &[t as u64]);
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let stats: Vec<(f64, f64)> =
                counts.iter().zip(y).map(|(&c, &l)| (c as f64, c as f64 * l as f64)).collect();
            let active: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
            tree::build(x, &sorted, &stats, &active, &cfg, Some(&mut rng))
        })
        .collect();
    Ok(RfModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_class_predicts_constant() {
        let x = Matrix::new(5, 2, (0..10).map(|v| v as f64 * 0.1).collect());
        let m = fit(&RfParams { n_estimators: 7, ..Default::default() }, &x, &[1; 5], 3).unwrap();
        for i in 0..5 {
            assert_eq!(m.predict(x.row(i)), 1.0);
        }
        assert_eq!(m.predict(&[9.0, -9.0]), 1.0);
    }

    #[test]
    fn feature_count_rule() {
        assert_eq!(max_features(1), 1);
        assert_eq!(max_features(30), 5);
        assert_eq!(max_features(48), 6);
    }

    #[test]
    fn deterministic_given_seed() {
        let x = Matrix::new(20, 3, (0..60).map(|v| ((v * 37) % 11) as f64).collect());
        let y: Vec<u8> = (0..20).map(|i| (i % 3 == 0) as u8).collect();
        let p = RfParams { n_estimators: 5, criterion: Criterion::Entropy, max_depth: None };
        assert_eq!(fit(&p, &x, &y, 1).unwrap(), fit(&p, &x, &y, 1).unwrap());
        assert_ne!(fit(&p, &x, &y, 1).unwrap(), fit(&p, &x, &y, 2).unwrap());
    }
}
