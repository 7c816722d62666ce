//! Synthetic RFQ event streams with a planted, drifting fill signal.
//!
//! Features follow a mean-reverting latent-factor walk: a handful of AR(1)
//! market factors mixed through random loadings plus per-feature AR(1)
//! idiosyncratic terms, scaled by a single noise scale and clipped to
//! `[-1, 1]`. The noise scale is bisected until the mean step change between
//! neighbouring events hits its target.
//!
//! Labels are Bernoulli draws from a logistic link over `k` signal features.
//! The signal direction is an Ornstein-Uhlenbeck walk in wall-clock time whose
//! autocorrelation halves every `signal_half_life_hours`, so a model trained
//! on old data sees its signal fade at a known rate.

use rand::Rng as _;
use rand::seq::SliceRandom;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{summarize, EventDataset, Timestamp, TradeEvent, MICROS_PER_DAY, MICROS_PER_HOUR};
use crate::learners::auc::auc;
use crate::seed;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("calibration failed: {0}")]
    CalibrationFailure(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
}

/// 2024-07-24 00:00:00 UTC.
pub const DEFAULT_START: Timestamp = 1_721_779_200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_events: usize,
    pub feature_count: usize,
    pub label_rate_target: f64,
    pub mean_step_change_target: f64,
    pub signal_feature_count: usize,
    /// `None` keeps the signal direction fixed forever.
    pub signal_half_life_hours: Option<f64>,
    /// Hours of event flow inside each 24 h block.
    pub trading_day_hours: f64,
    pub events_per_day: usize,
    pub start_timestamp: Timestamp,
    pub latent_factors: usize,
    /// Scale of the logit contributed by the signal direction.
    pub signal_strength: f64,
    pub base_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_events: 16_000,
            feature_count: 216,
            label_rate_target: 0.37,
            mean_step_change_target: 0.05,
            signal_feature_count: 12,
            signal_half_life_hours: Some(24.0),
            trading_day_hours: 8.0,
            events_per_day: 232,
            start_timestamp: DEFAULT_START,
            latent_factors: 4,
            signal_strength: 8.0,
            base_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if !(self.label_rate_target > 0.0 && self.label_rate_target < 1.0) {
            return bad("label_rate_target must lie in (0, 1)");
        }
        if self.signal_feature_count < 1 || self.signal_feature_count > self.feature_count {
            return bad("signal_feature_count must lie in [1, feature_count]");
        }
        if self.n_events < 2 {
            return bad("n_events must be at least 2");
        }
        if self.events_per_day == 0 {
            return bad("events_per_day must be positive");
        }
        if !(self.trading_day_hours > 0.0 && self.trading_day_hours <= 24.0) {
            return bad("trading_day_hours must lie in (0, 24]");
        }
        if !(self.mean_step_change_target > 0.0) {
            return bad("mean_step_change_target must be positive");
        }
        if matches!(self.signal_half_life_hours, Some(h) if !(h > 0.0)) {
            return bad("signal_half_life_hours must be positive");
        }
        if self.latent_factors == 0 {
            return bad("latent_factors must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub signal_features: Vec<usize>,
    pub intercept: f64,
    pub signal_strength: f64,
    /// Unit signal direction in effect at each event.
    pub coefficient_path: Vec<Vec<f64>>,
    pub true_probability: Vec<f64>,
}

impl GroundTruth {
    /// Fill probability of `features` under the coefficients in force at event `at`.
    pub fn probability_at(&self, at: usize, features: &[f64]) -> f64 {
        let z: f64 = self.signal_features
            .iter()
            .zip(&self.coefficient_path[at])
            .map(|(&j, &b)| features[j] * b)
            .sum();
        sigmoid(self.intercept + self.signal_strength * z)
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

const FACTOR_PERSISTENCE: f64 = 0.99;
const IDIO_PERSISTENCE: f64 = 0.95;
const FACTOR_SHARE: f64 = 0.5;
const MAX_BISECTION: usize = 20;
const LABEL_RETRIES: u64 = 10;

/// Pre-drawn innovations; the feature path for a given noise scale is a pure
/// function of these, so calibration never perturbs the random stream.
struct LatentDraws {
    loadings: Vec<Vec<f64>>,
    factor_shocks: Vec<Vec<f64>>,
    idio_shocks: Vec<Vec<f64>>,
}

impl LatentDraws {
    fn draw(cfg: &SynthConfig) -> Self {
        let n = cfg.n_events;
        let p = cfg.feature_count;
        let k = cfg.latent_factors;
        let mut rng = seed::derived_rng(cfg.base_seed, &[1]);
        let loadings = (0..p)
            .map(|_| {
                let row: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
                row.into_iter().map(|v| v / norm).collect()
            })
            .collect();
        let mut rng = seed::derived_rng(cfg.base_seed, &[2]);
        let factor_shocks = (0..n).map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let mut rng = seed::derived_rng(cfg.base_seed, &[3]);
        let idio_shocks = (0..n).map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect()).collect();
        Self { loadings, factor_shocks, idio_shocks }
    }

    fn features(&self, scale: f64) -> Vec<Vec<f64>> {
        let k = self.factor_shocks.first().map_or(0, Vec::len);
        let p = self.loadings.len();
        let f_innov = (1.0 - FACTOR_PERSISTENCE * FACTOR_PERSISTENCE).sqrt();
        let u_innov = (1.0 - IDIO_PERSISTENCE * IDIO_PERSISTENCE).sqrt();
        let f_w = FACTOR_SHARE.sqrt();
        let u_w = (1.0 - FACTOR_SHARE).sqrt();
        let mut factors = vec![0.0; k];
        let mut idio = vec![0.0; p];
        let mut out = Vec::with_capacity(self.factor_shocks.len());
        for (t, (fs, us)) in self.factor_shocks.iter().zip(&self.idio_shocks).enumerate() {
            for (f, s) in factors.iter_mut().zip(fs) {
                // start in the stationary distribution
                *f = if t == 0 { *s } else { FACTOR_PERSISTENCE * *f + f_innov * s };
            }
            for (u, s) in idio.iter_mut().zip(us) {
                *u = if t == 0 { *s } else { IDIO_PERSISTENCE * *u + u_innov * s };
            }
            let row = (0..p)
                .map(|i| {
                    let common: f64 = self.loadings[i].iter().zip(&factors).map(|(l, f)| l * f).sum();
                    (scale * (f_w * common + u_w * idio[i])).clamp(-1.0, 1.0)
                })
                .collect();
            out.push(row);
        }
        out
    }
}

fn mean_step_change(rows: &[Vec<f64>]) -> f64 {
    if rows.len() < 2 {
        return 0.0;
    }
    let p = rows[0].len().max(1) as f64;
    rows.windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum::<f64>() / p)
        .sum::<f64>()
        / (rows.len() - 1) as f64
}

fn timestamps(cfg: &SynthConfig) -> Vec<Timestamp> {
    let mut rng = seed::derived_rng(cfg.base_seed, &[4]);
    let session = (cfg.trading_day_hours * MICROS_PER_HOUR as f64) as i64;
    let mut out = Vec::with_capacity(cfg.n_events);
    let mut day = 0i64;
    while out.len() < cfg.n_events {
        let count = cfg.events_per_day.min(cfg.n_events - out.len());
        let mut offsets: Vec<i64> = (0..count).map(|_| rng.random_range(0..session.max(1))).collect();
        offsets.sort_unstable();
        let base = cfg.start_timestamp + day * MICROS_PER_DAY;
        out.extend(offsets.into_iter().map(|o| base + o));
        day += 1;
    }
    out
}

fn coefficient_path(cfg: &SynthConfig, times: &[Timestamp]) -> Vec<Vec<f64>> {
    let k = cfg.signal_feature_count;
    let mut rng = seed::derived_rng(cfg.base_seed, &[5]);
    let mut beta: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let rate = cfg
        .signal_half_life_hours
        .map(|h| std::f64::consts::LN_2 / (h * MICROS_PER_HOUR as f64));
    let mut path = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        // draws are consumed even for a frozen signal so the other streams align
        let shocks: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        if i > 0 {
            if let Some(rate) = rate {
                let decay = (-rate * (t - times[i - 1]) as f64).exp();
                let innov = (1.0 - decay * decay).max(0.0).sqrt();
                for (b, s) in beta.iter_mut().zip(&shocks) {
                    *b = decay * *b + innov * s;
                }
            }
        }
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-12);
        path.push(beta.iter().map(|b| b / norm).collect());
    }
    path
}

/// Generates a dataset plus the ground truth that produced its labels.
pub fn generate(cfg: &SynthConfig) -> Result<(EventDataset, GroundTruth), SynthError> {
    cfg.validate()?;
    let draws = LatentDraws::draw(cfg);

    // bisection on the noise scale; step change is monotone in it up to clipping
    let target = cfg.mean_step_change_target;
    let (mut lo, mut hi) = (1e-4_f64, 4.0_f64);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for _ in 0..MAX_BISECTION {
        let mid = 0.5 * (lo + hi);
        let rows = draws.features(mid);
        let step = mean_step_change(&rows);
        let err = (step - target).abs() / target;
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, rows));
        }
        if err < 1e-3 {
            break;
        }
        if step < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (err, features) = best.expect("at least one bisection step");
    if err > 0.2 {
        return Err(SynthError::CalibrationFailure(format!(
            "mean step change off target by {:.1}%",
            100.0 * err
        )));
    }

    let mut rng = seed::derived_rng(cfg.base_seed, &[6]);
    let mut signal_features: Vec<usize> = (0..cfg.feature_count).collect();
    signal_features.shuffle(&mut rng);
    signal_features.truncate(cfg.signal_feature_count);
    signal_features.sort_unstable();

    let times = timestamps(cfg);
    let path = coefficient_path(cfg, &times);
    let projections: Vec<f64> = features
        .iter()
        .zip(&path)
        .map(|(x, b)| signal_features.iter().zip(b).map(|(&j, c)| x[j] * c).sum())
        .collect();

    // intercept such that the mean true probability matches the target rate
    let mean_prob = |b0: f64| {
        projections.iter().map(|z| sigmoid(b0 + cfg.signal_strength * z)).sum::<f64>()
            / projections.len() as f64
    };
    let (mut lo, mut hi) = (-30.0_f64, 30.0_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_prob(mid) < cfg.label_rate_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let intercept = 0.5 * (lo + hi);
    let true_probability: Vec<f64> =
        projections.iter().map(|z| sigmoid(intercept + cfg.signal_strength * z)).collect();

    let labels = (0..LABEL_RETRIES)
        .map(|attempt| {
            let mut rng = seed::derived_rng(cfg.base_seed, &[7, attempt]);
            true_probability.iter().map(|&q| u8::from(rng.random::<f64>() < q)).collect::<Vec<u8>>()
        })
        .find(|labels| {
            let rate = labels.iter().map(|&l| l as f64).sum::<f64>() / labels.len() as f64;
            (rate - cfg.label_rate_target).abs() <= 0.03
        })
        .ok_or_else(|| {
            SynthError::CalibrationFailure("empirical label rate outside +/-3 points".into())
        })?;

    let events = times
        .iter()
        .zip(features)
        .zip(labels)
        .enumerate()
        .map(|(i, ((&t, f), l))| TradeEvent::new(t, i as u64, f, Some(l)))
        .collect();
    let dataset = EventDataset::new(cfg.feature_count, events, None, "synthetic")?;
    let truth = GroundTruth {
        signal_features,
        intercept,
        signal_strength: cfg.signal_strength,
        coefficient_path: path,
        true_probability,
    };
    Ok((dataset, truth))
}

/// Scores each labeled event with the coefficients that were in force at the
/// end of the trading day `bucket + 1` days earlier, i.e. the best any model
/// frozen at that point could do. Events without such history are skipped.
/// Returns `(scores, labels)`.
pub fn stale_scores(truth: &GroundTruth, dataset: &EventDataset, bucket: u32) -> (Vec<f64>, Vec<u8>) {
    let events = dataset.events();
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for ev in events {
        let Some(label) = ev.label else { continue };
        let day = ev.timestamp.div_euclid(MICROS_PER_DAY);
        let cutoff = (day - bucket as i64) * MICROS_PER_DAY;
        let anchor = dataset.lower_bound(cutoff);
        if anchor == 0 {
            continue;
        }
        scores.push(truth.probability_at(anchor - 1, &ev.features));
        labels.push(label);
    }
    (scores, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketCeiling {
    pub bucket: u32,
    pub n_events: usize,
    pub ceiling_auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantReport {
    pub signal_features: Vec<usize>,
    pub mean_true_probability: f64,
    pub label_rate: Option<f64>,
    pub buckets: Vec<BucketCeiling>,
}

pub const REPORT_BUCKETS: u32 = 5;

/// Achievable-AUC ceiling per blinding bucket.
pub fn plant_report(truth: &GroundTruth, dataset: &EventDataset) -> PlantReport {
    let buckets = (0..REPORT_BUCKETS)
        .map(|b| {
            let (scores, labels) = stale_scores(truth, dataset, b);
            BucketCeiling { bucket: b, n_events: scores.len(), ceiling_auc: auc(&scores, &labels).ok() }
        })
        .collect();
    let n = truth.true_probability.len().max(1) as f64;
    PlantReport {
        signal_features: truth.signal_features.clone(),
        mean_true_probability: truth.true_probability.iter().sum::<f64>() / n,
        label_rate: summarize(dataset).ok().and_then(|s| s.label_rate),
        buckets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_events: 2000,
            feature_count: 30,
            signal_feature_count: 6,
            base_seed: seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn rejects_bad_configs() {
        for cfg in [
            SynthConfig { label_rate_target: 1.0, ..small(0) },
            SynthConfig { signal_feature_count: 0, ..small(0) },
            SynthConfig { signal_feature_count: 31, ..small(0) },
            SynthConfig { n_events: 1, ..small(0) },
        ] {
            assert!(matches!(generate(&cfg), Err(SynthError::InvalidConfig(_))));
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let (a, ta) = generate(&small(3)).unwrap();
        let (b, tb) = generate(&small(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert!(a.events().iter().flat_map(|e| &e.features).all(|v| (-1.0..=1.0).contains(v)));
        let (c, _) = generate(&small(4)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn hits_step_and_label_targets() {
        let cfg = small(11);
        let (d, truth) = generate(&cfg).unwrap();
        let s = summarize(&d).unwrap();
        assert!((s.mean_step_change - 0.05).abs() <= 0.01, "{}", s.mean_step_change);
        assert!((s.label_rate.unwrap() - 0.37).abs() <= 0.03);
        assert!(truth.true_probability.iter().all(|&q| q > 0.0 && q < 1.0));
    }

    #[test]
    fn frozen_signal_has_constant_path() {
        let cfg = SynthConfig { signal_half_life_hours: None, ..small(2) };
        let (_, truth) = generate(&cfg).unwrap();
        assert!(truth.coefficient_path.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn constant_probability_ceiling_is_half() {
        let cfg = SynthConfig { signal_strength: 0.0, ..small(5) };
        let (d, truth) = generate(&cfg).unwrap();
        let report = plant_report(&truth, &d);
        for b in &report.buckets {
            assert_eq!(b.ceiling_auc, Some(0.5));
        }
    }

    #[test]
    fn separated_probabilities_give_unit_ceiling() {
        let events: Vec<TradeEvent> = (0..80)
            .map(|i| {
                let y = (i % 3 == 0) as u8;
                let x = if y == 1 { 1.0 } else { -1.0 };
                TradeEvent::new(i * MICROS_PER_DAY / 8, i as u64, vec![x], Some(y))
            })
            .collect();
        let d = EventDataset::new(1, events, None, "synthetic").unwrap();
        let truth = GroundTruth {
            signal_features: vec![0],
            intercept: 0.0,
            signal_strength: 9f64.ln(),
            coefficient_path: vec![vec![1.0]; 80],
            true_probability: d.events().iter().map(|e| if e.label == Some(1) { 0.9 } else { 0.1 }).collect(),
        };
        assert!((truth.probability_at(0, &[1.0]) - 0.9).abs() < 1e-12);
        let report = plant_report(&truth, &d);
        assert!(report.buckets.iter().all(|b| b.ceiling_auc == Some(1.0)));
    }
}
