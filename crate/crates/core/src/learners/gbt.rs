//! Gradient boosted regression trees on the logistic loss.
//!
//! Each stage fits a depth-limited tree to the loss gradient and hessian with
//! Newton leaf weights `−G/(H+λ)`, shrunk by `learning_rate`. The initial
//! margin is the prior log-odds of the training labels.

use serde::{Deserialize, Serialize};

use super::tree::{self, BuildConfig, Objective, Tree};
use super::{sigmoid, LearnError, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub max_depth: usize,
    pub n_estimators: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum per child.
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self { max_depth: 3, n_estimators: 100, learning_rate: 0.1, lambda: 1.0, min_child_weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_margin: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_margin + self.trees.iter().map(|t| self.learning_rate * t.predict(row)).sum::<f64>()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin(row))
    }
}

pub fn fit(params: &GbtParams, x: &Matrix, y: &[u8]) -> Result<GbtModel, LearnError> {
    if params.max_depth == 0 || params.n_estimators == 0 || !(params.learning_rate > 0.0) || params.lambda < 0.0 {
        return Err(LearnError::InvalidParams(format!("{params:?}")));
    }
    let n = x.rows();
    let rate = y.iter().map(|&l| l as f64).sum::<f64>() / n as f64;
    let base_margin = (rate / (1.0 - rate)).ln();
    let sorted = tree::presort(x);
    let active = vec![true; n];
    let cfg = BuildConfig {
        objective: Objective::Newton { lambda: params.lambda, min_child_weight: params.min_child_weight },
        max_depth: Some(params.max_depth),
        max_features: None,
    };
    let mut margins = vec![base_margin; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let mut stats = vec![(0.0, 0.0); n];
    for _ in 0..params.n_estimators {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            stats[i] = (p - y[i] as f64, (p * (1.0 - p)).max(1e-16));
        }
        let t = tree::build(x, &sorted, &stats, &active, &cfg, None);
        for (i, m) in margins.iter_mut().enumerate() {
            *m += params.learning_rate * t.predict(x.row(i));
        }
        trees.push(t);
    }
    Ok(GbtModel { base_margin, learning_rate: params.learning_rate, trees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_stage_equals_newton_step() {
        let x = Matrix::new(6, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [0, 0, 0, 1, 1, 1];
        let params = GbtParams { max_depth: 1, n_estimators: 1, learning_rate: 1.0, lambda: 1.0, min_child_weight: 0.0 };
        let m = fit(&params, &x, &y).unwrap();
        // prior 0.5 → margin 0, g = ∓0.5, h = 0.25 per row; split at 2.5
        let left = 1.5 / (0.75 + 1.0);
        assert_eq!(m.base_margin, 0.0);
        assert_eq!(m.trees[0].nodes[0].threshold, 2.5);
        assert!((m.predict(&[1.0]) - sigmoid(-left)).abs() < 1e-15);
        assert!((m.predict(&[4.0]) - sigmoid(left)).abs() < 1e-15);
    }

    #[test]
    fn more_stages_reduce_training_loss() {
        let x = Matrix::new(8, 1, (0..8).map(|v| v as f64).collect());
        let y = [0, 0, 1, 0, 1, 1, 0, 1];
        let loss = |m: &GbtModel| -> f64 {
            (0..8)
                .map(|i| {
                    let p = m.predict(x.row(i));
                    if y[i] == 1 {
                        -p.ln()
                    } else {
                        -(1.0 - p).ln()
                    }
                })
                .sum()
        };
        let few = fit(&GbtParams { n_estimators: 2, min_child_weight: 0.0, ..Default::default() }, &x, &y).unwrap();
        let many = fit(&GbtParams { n_estimators: 50, min_child_weight: 0.0, ..Default::default() }, &x, &y).unwrap();
        assert!(loss(&many) < loss(&few));
    }
}
