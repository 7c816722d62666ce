//! Binary fill-probability learners, grid-search cross-validation and AUC.
//!
//! Four families are available: L2-regularised logistic regression, gradient
//! boosted trees on the logistic loss, random forests and a feed-forward
//! network. Every fit is a pure function of `(params, data, seed)`.

pub mod auc;
pub mod forest;
pub mod gbt;
pub mod grid;
pub mod logistic;
pub mod mlp;
pub mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use auc::auc;
pub use forest::{Criterion, RfParams};
pub use gbt::GbtParams;
pub use grid::{default_grid, grid_search_cv, CvConfig};
pub use logistic::LrParams;
pub use mlp::{mlp_hidden_layers, Activation, LearningRateSchedule, MlpParams};

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("training labels contain a single class")]
    SingleClassTraining,
    #[error("evaluation labels contain a single class")]
    SingleClassEval,
    #[error("non-finite feature or score")]
    NonFiniteFeature,
    #[error("expected dimension {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix shape mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LearnError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LearnError::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "GBT", alias = "XGB")]
    Gbt,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "MLP", alias = "NN")]
    Mlp,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Lr, Family::Gbt, Family::Rf, Family::Mlp];

    /// Row label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Family::Lr => "LR",
            Family::Gbt => "XGB",
            Family::Rf => "RF",
            Family::Mlp => "NN",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ModelParams {
    #[serde(rename = "LR")]
    Lr(LrParams),
    #[serde(rename = "GBT", alias = "XGB")]
    Gbt(GbtParams),
    #[serde(rename = "RF")]
    Rf(RfParams),
    #[serde(rename = "MLP", alias = "NN")]
    Mlp(MlpParams),
}

impl ModelParams {
    pub fn family(&self) -> Family {
        match self {
            ModelParams::Lr(_) => Family::Lr,
            ModelParams::Gbt(_) => Family::Gbt,
            ModelParams::Rf(_) => Family::Rf,
            ModelParams::Mlp(_) => Family::Mlp,
        }
    }

    /// Compact human-readable description of the grid cell.
    pub fn describe(&self) -> String {
        match self {
            ModelParams::Lr(p) => format!("C={:.4e}", p.c),
            ModelParams::Gbt(p) => {
                format!("max_depth={} n_estimators={} learning_rate={}", p.max_depth, p.n_estimators, p.learning_rate)
            }
            ModelParams::Rf(p) => format!("criterion={:?} n_estimators={}", p.criterion, p.n_estimators),
            ModelParams::Mlp(p) => format!(
                "hidden={:?} activation={:?} schedule={:?}",
                p.hidden_layer_sizes, p.activation, p.learning_rate
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FittedModel {
    Lr(logistic::LrModel),
    Gbt(gbt::GbtModel),
    Rf(forest::RfModel),
    Mlp(mlp::MlpModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub seed: u64,
    pub feature_count: usize,
    pub model: FittedModel,
    pub grid_cell: Option<usize>,
    pub validation_auc: Option<f64>,
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        self.params.family()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialises")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// SHA-256 over the serialised fitted parameters.
    pub fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(&self.model).expect("model serialises");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn check_training(x: &Matrix, y: &[u8], allow_single_class: bool) -> Result<(), LearnError> {
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), found: y.len() });
    }
    if x.rows() < 2 {
        return Err(LearnError::TooFewSamples(x.rows()));
    }
    if !x.all_finite() {
        return Err(LearnError::NonFiniteFeature);
    }
    if y.iter().any(|&l| l > 1) {
        return Err(LearnError::InvalidParams("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if !allow_single_class && (pos == 0 || pos == y.len()) {
        return Err(LearnError::SingleClassTraining);
    }
    Ok(())
}

/// Fits one model. Random forests accept single-class data (every leaf is
/// then pure); the other families reject it.
pub fn train(params: &ModelParams, x: &Matrix, y: &[u8], seed: u64) -> Result<TrainedModel, LearnError> {
    check_training(x, y, matches!(params, ModelParams::Rf(_)))?;
    let model = match params {
        ModelParams::Lr(p) => FittedModel::Lr(logistic::fit(p, x, y)?),
        ModelParams::Gbt(p) => FittedModel::Gbt(gbt::fit(p, x, y)?),
        ModelParams::Rf(p) => FittedModel::Rf(forest::fit(p, x, y, seed)?),
        ModelParams::Mlp(p) => FittedModel::Mlp(mlp::fit(p, x, y, seed)?),
    };
    Ok(TrainedModel {
        params: params.clone(),
        seed,
        feature_count: x.cols(),
        model,
        grid_cell: None,
        validation_auc: None,
    })
}

pub fn predict_proba(model: &TrainedModel, x: &Matrix) -> Result<Vec<f64>, LearnError> {
    if x.cols() != model.feature_count {
        return Err(LearnError::DimensionMismatch { expected: model.feature_count, found: x.cols() });
    }
    let out: Vec<f64> = (0..x.rows())
        .map(|i| {
            let row = x.row(i);
            match &model.model {
                FittedModel::Lr(m) => m.predict(row),
                FittedModel::Gbt(m) => m.predict(row),
                FittedModel::Rf(m) => m.predict(row),
                FittedModel::Mlp(m) => m.predict(row),
            }
        })
        .map(|p| p.clamp(0.0, 1.0))
        .collect();
    Ok(out)
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_shape_checks() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.row(1), &[3.0, 4.0]);
        assert_eq!(m.select_rows(&[1, 1]).row(0), &[3.0, 4.0]);
    }

    #[test]
    fn training_guards() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let lr = ModelParams::Lr(LrParams::default());
        assert_eq!(train(&lr, &x, &[1, 1, 1], 0).unwrap_err(), LearnError::SingleClassTraining);
        let bad = Matrix::from_rows(&[vec![f64::NAN], vec![1.0]]).unwrap();
        assert_eq!(train(&lr, &bad, &[0, 1], 0).unwrap_err(), LearnError::NonFiniteFeature);
        let m = train(&lr, &x, &[0, 1, 1], 0).unwrap();
        let wide = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(predict_proba(&m, &wide), Err(LearnError::DimensionMismatch { .. })));
    }

    #[test]
    fn params_json_tags() {
        let p = ModelParams::Gbt(GbtParams::default());
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"family\":\"GBT\""));
        let back: ModelParams = serde_json::from_str(&s.replace("GBT", "XGB")).unwrap();
        assert_eq!(back, p);
    }
}
