//! Walk-forward backtesting with blinding-window buckets.
//!
//! At every anchor time the most recent labeled events strictly before the
//! anchor form the training window. A grid-searched model per family is
//! trained once and then scores every later labeled event whose distance from
//! the end of the training window falls in one of the configured day buckets.
//! Per-(source, model, bucket) AUC statistics are taken across evaluation
//! groups (one group = one anchor and one training size).

mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, EventDataset, Timestamp, MICROS_PER_DAY};
use crate::learners::{
    auc, default_grid, grid_search_cv, predict_proba, CvConfig, Family, LearnError, Matrix, ModelParams, TrainedModel,
};
use crate::seed;

pub use report::{emit_report, render_table, svg_decay, svg_feature_hist, RECORDS_HEADER};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("no anchor has {needed} labeled events of history")]
    InsufficientHistory { needed: usize },
    #[error("delta must be at least 1 microsecond, got {0}")]
    NonPositiveDelta(i64),
    #[error("baseline source {0:?} not present")]
    MissingBaseline(String),
    #[error("no data sources given")]
    NoSources,
    #[error("source {source_name:?} is not aligned with {reference:?} at row {row}")]
    SourceMisaligned { source_name: String, reference: String, row: usize },
    #[error("invalid backtest configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialisation error: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum Stride {
    /// One anchor at the start of every trading day.
    #[default]
    PerDay,
    /// An anchor at every labeled event.
    EveryEvent,
    /// An anchor at every n-th labeled event.
    EveryNth(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacktestConfig {
    pub training_sizes: Vec<usize>,
    /// Day offsets after the training window that are scored.
    pub buckets: Vec<u32>,
    pub families: Vec<Family>,
    pub stride: Stride,
    pub master_seed: u64,
    pub cv_folds: usize,
    /// Per-family grid overrides; families not listed use the default grid.
    pub grids: BTreeMap<Family, Vec<ModelParams>>,
    /// Keep only the first `n` anchors.
    pub max_anchors: Option<usize>,
    /// Source used as the reference in comparison tables.
    pub baseline: String,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            training_sizes: vec![500, 1000, 1500, 2000],
            buckets: vec![0, 1, 2, 3, 4],
            families: Family::ALL.to_vec(),
            stride: Stride::PerDay,
            master_seed: 0,
            cv_folds: 4,
            grids: BTreeMap::new(),
            max_anchors: None,
            baseline: "classical".into(),
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<(), BacktestError> {
        if self.training_sizes.is_empty() || self.training_sizes.iter().any(|&s| s < 2) {
            return Err(BacktestError::InvalidConfig("training sizes must be non-empty and ≥ 2".into()));
        }
        if self.buckets.is_empty() {
            return Err(BacktestError::InvalidConfig("buckets must be non-empty".into()));
        }
        if self.families.is_empty() {
            return Err(BacktestError::InvalidConfig("families must be non-empty".into()));
        }
        if self.cv_folds < 2 {
            return Err(BacktestError::InvalidConfig("cv_folds must be ≥ 2".into()));
        }
        if self.stride == Stride::EveryNth(0) {
            return Err(BacktestError::InvalidConfig("stride n must be positive".into()));
        }
        Ok(())
    }

    fn grid(&self, family: Family, p: usize) -> Vec<ModelParams> {
        self.grids.get(&family).cloned().unwrap_or_else(|| default_grid(family, p))
    }
}

/// `⌊Δ / 24 h⌋`; bucket 0 is `[1 µs, 24 h)`.
pub fn bucketize(delta: i64) -> Result<u32, BacktestError> {
    if delta < 1 {
        return Err(BacktestError::NonPositiveDelta(delta));
    }
    Ok((delta / MICROS_PER_DAY) as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestRecord {
    pub source: String,
    pub model: Family,
    pub training_size: usize,
    pub anchor: Timestamp,
    pub train_start: Timestamp,
    pub train_end: Timestamp,
    pub event_id: u64,
    pub timestamp: Timestamp,
    pub delta: i64,
    pub bucket: u32,
    pub grid_cell: usize,
    pub model_checksum: String,
    pub probability: f64,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedInstance {
    pub source: String,
    pub model: Family,
    pub training_size: usize,
    pub anchor: Timestamp,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub source: String,
    pub model: Family,
    pub bucket: u32,
    pub n_groups: usize,
    pub n_records: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    pub source: String,
    /// Bin edges span `[lo, hi]` in `counts.len()` equal bins.
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BacktestResult {
    pub sources: Vec<String>,
    pub families: Vec<Family>,
    pub buckets: Vec<u32>,
    pub records: Vec<BacktestRecord>,
    pub skipped: Vec<SkippedInstance>,
    pub summary: Vec<GroupStats>,
    pub histograms: Vec<FeatureHistogram>,
}

impl BacktestResult {
    pub fn stats(&self, source: &str, model: Family, bucket: u32) -> Option<&GroupStats> {
        self.summary.iter().find(|g| g.source == source && g.model == model && g.bucket == bucket)
    }
}

/// Dataset rows as a matrix plus labels for the given positions.
fn design(dataset: &EventDataset, positions: &[usize]) -> (Matrix, Vec<u8>) {
    let events = dataset.events();
    let p = dataset.feature_count();
    let mut data = Vec::with_capacity(positions.len() * p);
    let mut y = Vec::with_capacity(positions.len());
    for &i in positions {
        data.extend_from_slice(&events[i].features);
        y.push(events[i].label.unwrap_or(0));
    }
    (Matrix::new(positions.len(), p, data), y)
}

/// Positions of the last `size` labeled events strictly before `anchor`.
pub fn training_positions(dataset: &EventDataset, anchor: Timestamp, size: usize) -> Option<Vec<usize>> {
    let cut = dataset.lower_bound(anchor);
    let mut out: Vec<usize> = (0..cut).rev().filter(|&i| dataset.events()[i].label.is_some()).take(size).collect();
    if out.len() < size {
        return None;
    }
    out.reverse();
    Some(out)
}

/// Seed of one training instance; independent of the data source.
pub fn instance_seed(master: u64, anchor: Timestamp, size: usize, family: Family) -> u64 {
    seed::derive(master, &[anchor as u64, size as u64, family as u64])
}

/// Grid search on the training window ending before `anchor`.
pub fn train_instance(
    dataset: &EventDataset,
    anchor: Timestamp,
    size: usize,
    family: Family,
    config: &BacktestConfig,
) -> Result<TrainedModel, BacktestError> {
    let positions =
        training_positions(dataset, anchor, size).ok_or(BacktestError::InsufficientHistory { needed: size })?;
    let (x, y) = design(dataset, &positions);
    let cv = CvConfig { folds: config.cv_folds, seed: instance_seed(config.master_seed, anchor, size, family) };
    Ok(grid_search_cv(&config.grid(family, dataset.feature_count()), &x, &y, &cv)?)
}

/// Anchor timestamps with enough labeled history for the largest training size.
pub fn anchors(dataset: &EventDataset, config: &BacktestConfig) -> Vec<Timestamp> {
    let max_size = config.training_sizes.iter().copied().max().unwrap_or(0);
    let labeled: Vec<Timestamp> = dataset.events().iter().filter(|e| e.label.is_some()).map(|e| e.timestamp).collect();
    if labeled.len() <= max_size {
        return Vec::new();
    }
    // earliest admissible anchor: strictly after the max_size-th labeled event
    let first_ok = labeled[max_size - 1];
    let mut out: Vec<Timestamp> = match config.stride {
        Stride::PerDay => {
            let first_day = first_ok.div_euclid(MICROS_PER_DAY) + 1;
            let last_day = labeled[labeled.len() - 1].div_euclid(MICROS_PER_DAY);
            (first_day..=last_day).map(|d| d * MICROS_PER_DAY).collect()
        }
        Stride::EveryEvent | Stride::EveryNth(_) => {
            let n = if let Stride::EveryNth(n) = config.stride { n } else { 1 };
            let mut ts: Vec<Timestamp> = labeled.iter().copied().filter(|&t| t > first_ok).collect();
            ts.dedup();
            ts.into_iter().step_by(n).collect()
        }
    };
    if let Some(limit) = config.max_anchors {
        out.truncate(limit);
    }
    out
}

fn check_alignment(sources: &[(String, &EventDataset)]) -> Result<(), BacktestError> {
    let (ref_name, reference) = &sources[0];
    for (name, ds) in &sources[1..] {
        let mismatch = if ds.len() != reference.len() {
            Some(ds.len().min(reference.len()))
        } else {
            ds.events().iter().zip(reference.events()).position(|(a, b)| {
                a.event_id != b.event_id || a.timestamp != b.timestamp || a.label != b.label
            })
        };
        if let Some(row) = mismatch {
            return Err(BacktestError::SourceMisaligned {
                source_name: name.clone(),
                reference: ref_name.clone(),
                row,
            });
        }
    }
    Ok(())
}

struct Instance {
    source: usize,
    anchor: Timestamp,
    size: usize,
    family: Family,
}

enum Outcome {
    Records(Vec<BacktestRecord>),
    Skipped(SkippedInstance),
}

fn run_instance(
    inst: &Instance,
    name: &str,
    dataset: &EventDataset,
    config: &BacktestConfig,
    max_bucket: u32,
) -> Result<Outcome, BacktestError> {
    let skip = |reason: String| {
        log::warn!("skipping {name}/{}/{} at {}: {reason}", inst.family, inst.size, inst.anchor);
        Outcome::Skipped(SkippedInstance {
            source: name.to_string(),
            model: inst.family,
            training_size: inst.size,
            anchor: inst.anchor,
            reason,
        })
    };
    let positions = training_positions(dataset, inst.anchor, inst.size)
        .ok_or(BacktestError::InsufficientHistory { needed: inst.size })?;
    let events = dataset.events();
    let first_label = events[positions[0]].label;
    if positions.iter().all(|&i| events[i].label == first_label) {
        return Ok(skip("SingleClassWindow".into()));
    }
    let train_start = events[positions[0]].timestamp;
    let train_end = events[positions[positions.len() - 1]].timestamp;
    let model = match train_instance(dataset, inst.anchor, inst.size, inst.family, config) {
        Ok(m) => m,
        Err(BacktestError::Learn(LearnError::SingleClassTraining)) => return Ok(skip("SingleClassWindow".into())),
        Err(e) => return Err(e),
    };
    let checksum = model.checksum();
    let horizon_end = train_end.saturating_add((max_bucket as i64 + 1) * MICROS_PER_DAY);
    let lo = dataset.lower_bound(inst.anchor);
    let hi = dataset.lower_bound(horizon_end);
    let eval: Vec<usize> = (lo..hi)
        .filter(|&i| {
            let e = &events[i];
            e.label.is_some()
                && e.timestamp > train_end
                && config.buckets.contains(&(((e.timestamp - train_end) / MICROS_PER_DAY) as u32))
        })
        .collect();
    let (x, y) = design(dataset, &eval);
    let probs = predict_proba(&model, &x)?;
    let records = eval
        .iter()
        .zip(probs)
        .zip(y)
        .map(|((&i, probability), label)| {
            let e = &events[i];
            let delta = e.timestamp - train_end;
            Ok(BacktestRecord {
                source: name.to_string(),
                model: inst.family,
                training_size: inst.size,
                anchor: inst.anchor,
                train_start,
                train_end,
                event_id: e.event_id,
                timestamp: e.timestamp,
                delta,
                bucket: bucketize(delta)?,
                grid_cell: model.grid_cell.unwrap_or(0),
                model_checksum: checksum.clone(),
                probability,
                label,
            })
        })
        .collect::<Result<_, BacktestError>>()?;
    Ok(Outcome::Records(records))
}

/// Runs every (source, anchor, training size, family) instance.
pub fn run_protocol(
    config: &BacktestConfig,
    sources: &[(String, &EventDataset)],
) -> Result<BacktestResult, BacktestError> {
    config.validate()?;
    if sources.is_empty() {
        return Err(BacktestError::NoSources);
    }
    check_alignment(sources)?;
    let anchor_list = anchors(sources[0].1, config);
    if anchor_list.is_empty() {
        let needed = config.training_sizes.iter().copied().max().unwrap_or(0);
        return Err(BacktestError::InsufficientHistory { needed });
    }
    log::info!("{} anchors × {} sizes × {} families × {} sources", anchor_list.len(),
        config.training_sizes.len(), config.families.len(), sources.len());
    let max_bucket = config.buckets.iter().copied().max().unwrap_or(0);
    let mut instances = Vec::new();
    for s in 0..sources.len() {
        for &anchor in &anchor_list {
            for &size in &config.training_sizes {
                for &family in &config.families {
                    instances.push(Instance { source: s, anchor, size, family });
                }
            }
        }
    }
    let outcomes: Vec<Outcome> = instances
        .par_iter()
        .map(|inst| {
            let (name, ds) = &sources[inst.source];
            run_instance(inst, name, ds, config, max_bucket)
        })
        .collect::<Result<_, _>>()?;
    let mut result = BacktestResult {
        sources: sources.iter().map(|s| s.0.clone()).collect(),
        families: config.families.clone(),
        buckets: config.buckets.clone(),
        ..Default::default()
    };
    for o in outcomes {
        match o {
            Outcome::Records(r) => result.records.extend(r),
            Outcome::Skipped(s) => result.skipped.push(s),
        }
    }
    result.summary = summarize_records(&result.records, &result.sources, &result.families, &result.buckets);
    result.histograms = sources.iter().map(|(n, d)| feature_histogram(n, d, 40)).collect();
    Ok(result)
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// AUC per evaluation group (anchor × training size), then mean, median and
/// sample std across groups for each (source, model, bucket). Groups with a
/// single class are left out.
pub fn summarize_records(
    records: &[BacktestRecord],
    sources: &[String],
    families: &[Family],
    buckets: &[u32],
) -> Vec<GroupStats> {
    type Key<'a> = (&'a str, Family, u32, Timestamp, usize);
    let mut groups: BTreeMap<Key, (Vec<f64>, Vec<u8>)> = BTreeMap::new();
    for r in records {
        let g = groups.entry((&r.source, r.model, r.bucket, r.anchor, r.training_size)).or_default();
        g.0.push(r.probability);
        g.1.push(r.label);
    }
    let mut per_cell: BTreeMap<(&str, Family, u32), (Vec<f64>, usize)> = BTreeMap::new();
    for ((s, m, b, _, _), (scores, labels)) in &groups {
        if let Ok(a) = auc(scores, labels) {
            let cell = per_cell.entry((s, *m, *b)).or_default();
            cell.0.push(a);
            cell.1 += scores.len();
        }
    }
    let mut out = Vec::new();
    for s in sources {
        for &m in families {
            for &b in buckets {
                let Some((aucs, n_records)) = per_cell.get(&(s.as_str(), m, b)) else { continue };
                let mut sorted = aucs.clone();
                sorted.sort_by(f64::total_cmp);
                let n = sorted.len() as f64;
                let mean = sorted.iter().sum::<f64>() / n;
                let std = if sorted.len() > 1 {
                    (sorted.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt()
                } else {
                    0.0
                };
                out.push(GroupStats {
                    source: s.clone(),
                    model: m,
                    bucket: b,
                    n_groups: sorted.len(),
                    n_records: *n_records,
                    mean,
                    median: median_of(&sorted),
                    std,
                });
            }
        }
    }
    out
}

/// Pooled histogram of all feature values of a dataset over `[−1, 1]`.
pub fn feature_histogram(source: &str, dataset: &EventDataset, bins: usize) -> FeatureHistogram {
    let (lo, hi) = (-1.0, 1.0);
    let mut counts = vec![0u64; bins];
    let mut values: Vec<f64> = dataset.events().iter().flat_map(|e| e.features.iter().copied()).collect();
    for &v in &values {
        let k = (((v - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        counts[k] += 1;
    }
    values.sort_by(f64::total_cmp);
    let q = |f: f64| -> f64 {
        if values.is_empty() {
            return f64::NAN;
        }
        let pos = f * (values.len() - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos - pos.floor());
        let j = (i + 1).min(values.len() - 1);
        values[i] + frac * (values[j] - values[i])
    };
    FeatureHistogram { source: source.to_string(), lo, hi, counts, median: q(0.5), iqr: q(0.75) - q(0.25) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub source: String,
    pub model: Family,
    pub bucket: u32,
    pub median: f64,
    pub baseline_median: f64,
    /// `(median − baseline_median)` in percentage points, rounded.
    pub diff_pp: i64,
}

/// Differences of per-bucket median AUC against `baseline`.
pub fn compare_sources(result: &BacktestResult, baseline: &str) -> Result<Vec<ComparisonRow>, BacktestError> {
    if !result.sources.iter().any(|s| s == baseline) {
        return Err(BacktestError::MissingBaseline(baseline.to_string()));
    }
    let mut rows = Vec::new();
    for s in &result.sources {
        for &m in &result.families {
            for &b in &result.buckets {
                let (Some(g), Some(base)) = (result.stats(s, m, b), result.stats(baseline, m, b)) else { continue };
                rows.push(ComparisonRow {
                    source: s.clone(),
                    model: m,
                    bucket: b,
                    median: g.median,
                    baseline_median: base.median,
                    diff_pp: ((g.median - base.median) * 100.0).round() as i64,
                });
            }
        }
    }
    Ok(rows)
}

/// Signed integer rendering: `+12`, `−2`, `0`.
pub fn format_diff(pp: i64) -> String {
    match pp.signum() {
        1 => format!("+{pp}"),
        -1 => format!("\u{2212}{}", pp.unsigned_abs()),
        _ => "0".into(),
    }
}

/// Least-squares slope of mean AUC against bucket index.
pub fn decay_slope(result: &BacktestResult, source: &str, model: Family) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        result.buckets.iter().filter_map(|&b| result.stats(source, model, b).map(|g| (b as f64, g.mean))).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TradeEvent;

    #[test]
    fn bucket_boundaries() {
        assert_eq!(bucketize(1).unwrap(), 0);
        assert_eq!(bucketize(MICROS_PER_DAY - 1).unwrap(), 0);
        assert_eq!(bucketize(MICROS_PER_DAY).unwrap(), 1);
        assert_eq!(bucketize(3 * MICROS_PER_DAY + 1).unwrap(), 3);
        assert!(matches!(bucketize(0), Err(BacktestError::NonPositiveDelta(0))));
    }

    #[test]
    fn diff_formatting() {
        assert_eq!(format_diff(12), "+12");
        assert_eq!(format_diff(-2), "\u{2212}2");
        assert_eq!(format_diff(0), "0");
    }

    fn toy(n_days: i64, per_day: i64) -> EventDataset {
        let events = (0..n_days * per_day)
            .map(|i| {
                let t = i * MICROS_PER_DAY / per_day;
                let x = ((i * 7919) % 101) as f64 / 50.0 - 1.0;
                TradeEvent::new(t, i as u64, vec![x], Some(u8::from(x > 0.0)))
            })
            .collect();
        EventDataset::new(1, events, None, "classical").unwrap()
    }

    #[test]
    fn anchors_need_history() {
        let d = toy(6, 10);
        let cfg = BacktestConfig { training_sizes: vec![15], ..Default::default() };
        // the 15th labeled event is on day 1, so the first anchor is day 2
        assert_eq!(anchors(&d, &cfg), (2..6).map(|k| k * MICROS_PER_DAY).collect::<Vec<_>>());
        let every = BacktestConfig { stride: Stride::EveryNth(5), ..cfg.clone() };
        assert_eq!(anchors(&d, &every).len(), 9);
        let pos = training_positions(&d, 2 * MICROS_PER_DAY, 15).unwrap();
        assert_eq!(pos, (5..20).collect::<Vec<_>>());
    }

    #[test]
    fn constant_labels_are_skipped() {
        let events = (0..60)
            .map(|i| TradeEvent::new(i * MICROS_PER_DAY / 10, i as u64, vec![i as f64 / 60.0], Some(1)))
            .collect();
        let d = EventDataset::new(1, events, None, "classical").unwrap();
        let cfg = BacktestConfig {
            training_sizes: vec![10],
            families: vec![Family::Lr],
            ..Default::default()
        };
        let r = run_protocol(&cfg, &[("classical".into(), &d)]).unwrap();
        assert!(r.records.is_empty());
        assert!(!r.skipped.is_empty());
        assert!(r.skipped.iter().all(|s| s.reason == "SingleClassWindow"));
    }

    #[test]
    fn insufficient_history() {
        let d = toy(2, 5);
        let cfg = BacktestConfig { training_sizes: vec![50], ..Default::default() };
        assert!(matches!(
            run_protocol(&cfg, &[("classical".into(), &d)]),
            Err(BacktestError::InsufficientHistory { needed: 50 })
        ));
    }

    fn record(source: &str, bucket: u32, anchor: i64, p: f64, label: u8) -> BacktestRecord {
        BacktestRecord {
            source: source.into(),
            model: Family::Lr,
            training_size: 10,
            anchor,
            train_start: 0,
            train_end: 0,
            event_id: 0,
            timestamp: 1,
            delta: 1,
            bucket,
            grid_cell: 0,
            model_checksum: String::new(),
            probability: p,
            label,
        }
    }

    #[test]
    fn comparison_arithmetic() {
        // baseline AUC 0.5 per group, shifted source AUC 0.6 (4 pairs, 0.1 = ... use ranks)
        let mut records = Vec::new();
        for anchor in 0..3 {
            // baseline: scores tie → 0.5
            for (p, l) in [(0.5, 1), (0.5, 0)] {
                records.push(record("classical", 0, anchor, p, l));
                records.push(record("copy", 0, anchor, p, l));
            }
        }
        let sources = vec!["classical".to_string(), "copy".to_string()];
        let result = BacktestResult {
            summary: summarize_records(&records, &sources, &[Family::Lr], &[0]),
            sources,
            families: vec![Family::Lr],
            buckets: vec![0],
            records,
            ..Default::default()
        };
        let rows = compare_sources(&result, "classical").unwrap();
        assert!(rows.iter().all(|r| r.diff_pp == 0));
        let mut shifted = result.clone();
        for g in shifted.summary.iter_mut().filter(|g| g.source == "copy") {
            g.median += 0.10;
        }
        let rows = compare_sources(&shifted, "classical").unwrap();
        assert_eq!(rows.iter().find(|r| r.source == "copy").unwrap().diff_pp, 10);
        assert!(matches!(compare_sources(&result, "nope"), Err(BacktestError::MissingBaseline(_))));
    }
}
