//! Grid-search cross-validation and the default hyperparameter grids.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    auc, predict_proba, train, Activation, Criterion, Family, GbtParams, LearnError, LearningRateSchedule,
    LrParams, Matrix, MlpParams, ModelParams, RfParams, TrainedModel,
};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    /// Seeds fold shuffling and every per-cell/per-fold fit.
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: 4, seed: 0 }
    }
}

/// Contiguous folds over a seeded permutation of `0..n`.
pub fn fold_indices(n: usize, k: usize, seed_value: u64) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::derived_rng(seed_value, &[0x666f_6c64]));
    (0..k).map(|f| perm[f * n / k..(f + 1) * n / k].to_vec()).collect()
}

fn cell_fold_score(
    params: &ModelParams,
    x: &Matrix,
    y: &[u8],
    folds: &[Vec<usize>],
    fold: usize,
    fit_seed: u64,
) -> Result<Option<f64>, LearnError> {
    let valid = &folds[fold];
    let train_idx: Vec<usize> =
        folds.iter().enumerate().filter(|(f, _)| *f != fold).flat_map(|(_, v)| v.iter().copied()).collect();
    let yt: Vec<u8> = train_idx.iter().map(|&i| y[i]).collect();
    let yv: Vec<u8> = valid.iter().map(|&i| y[i]).collect();
    let single = |v: &[u8]| v.iter().all(|&l| l == v[0]);
    if yv.is_empty() || yt.len() < 2 || single(&yt) || single(&yv) {
        return Ok(None);
    }
    let model = train(params, &x.select_rows(&train_idx), &yt, fit_seed)?;
    let scores = predict_proba(&model, &x.select_rows(valid))?;
    Ok(Some(auc(&scores, &yv)?))
}

/// Scores every grid cell by mean k-fold validation AUC and refits the best
/// one on all data. Ties go to the earliest cell; folds whose training or
/// validation part holds a single class are skipped. A single-cell grid is
/// refit directly and carries no validation AUC.
pub fn grid_search_cv(grid: &[ModelParams], x: &Matrix, y: &[u8], cv: &CvConfig) -> Result<TrainedModel, LearnError> {
    if grid.is_empty() {
        return Err(LearnError::EmptyGrid);
    }
    if cv.folds < 2 {
        return Err(LearnError::InvalidParams(format!("folds={}", cv.folds)));
    }
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), found: y.len() });
    }
    if grid.len() == 1 {
        // nothing to select: the refit is the result
        let mut model = train(&grid[0], x, y, seed::derive(cv.seed, &[0, u64::MAX]))?;
        model.grid_cell = Some(0);
        return Ok(model);
    }
    let folds = fold_indices(x.rows(), cv.folds.min(x.rows()), cv.seed);
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|c| (0..folds.len()).map(move |f| (c, f))).collect();
    let scores: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let s = seed::derive(cv.seed, &[c as u64, f as u64]);
            cell_fold_score(&grid[c], x, y, &folds, f, s)
        })
        .collect::<Result<_, _>>()?;

    let mut best: Option<(usize, f64)> = None;
    for c in 0..grid.len() {
        let vals: Vec<f64> = scores[c * folds.len()..(c + 1) * folds.len()].iter().flatten().copied().collect();
        if vals.is_empty() {
            continue;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((c, mean));
        }
    }
    let (cell, val_auc) = match best {
        Some((c, a)) => (c, Some(a)),
        None => (0, None),
    };
    log::debug!("grid winner cell {cell} ({}) auc {:?}", grid[cell].describe(), val_auc);
    let mut model = train(&grid[cell], x, y, seed::derive(cv.seed, &[cell as u64, u64::MAX]))?;
    model.grid_cell = Some(cell);
    model.validation_auc = val_auc;
    Ok(model)
}

/// Default search space per family; `p` sizes the network layers.
pub fn default_grid(family: Family, p: usize) -> Vec<ModelParams> {
    match family {
        Family::Lr => (0..11)
            .map(|k| {
                let c = 10f64.powf(-4.0 + 0.8 * k as f64);
                ModelParams::Lr(LrParams { c, max_iter: 10_000, ..Default::default() })
            })
            .collect(),
        Family::Gbt => {
            let mut out = Vec::new();
            for max_depth in [3, 5, 7, 9, 11] {
                for n_estimators in (80..=180).step_by(20) {
                    for learning_rate in [0.15, 0.1, 0.05, 0.01] {
                        out.push(ModelParams::Gbt(GbtParams {
                            max_depth,
                            n_estimators,
                            learning_rate,
                            ..Default::default()
                        }));
                    }
                }
            }
            out
        }
        Family::Rf => {
            let mut out = Vec::new();
            for criterion in [Criterion::Gini, Criterion::Entropy, Criterion::LogLoss] {
                for n_estimators in (80..=180).step_by(20) {
                    out.push(ModelParams::Rf(RfParams { criterion, n_estimators, max_depth: None }));
                }
            }
            out
        }
        Family::Mlp => {
            let mut out = Vec::new();
            for depth in 1..=4 {
                for activation in [Activation::Relu, Activation::Logistic, Activation::Tanh] {
                    for schedule in
                        [LearningRateSchedule::Constant, LearningRateSchedule::Invscaling, LearningRateSchedule::Adaptive]
                    {
                        out.push(ModelParams::Mlp(MlpParams {
                            hidden_layer_sizes: super::mlp_hidden_layers(p, depth),
                            activation,
                            learning_rate: schedule,
                            max_iter: 10_000,
                            ..Default::default()
                        }));
                    }
                }
            }
            out
        }
    }
}
