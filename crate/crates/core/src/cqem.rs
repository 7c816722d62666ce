//! Classical–quantum event matching.
//!
//! Classical events are discretised into κ identifiers (one uniform bin index
//! per feature). Quantum feature vectors of a reference sample are averaged per
//! κ, and unseen events whose κ occurs in the index reuse that averaged vector
//! instead of running the circuit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EventDataset, TradeEvent};

#[derive(Debug, Error, PartialEq)]
pub enum CqemError {
    #[error("n_bins must be at least 2, got {0}")]
    TooFewBins(usize),
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("classical and quantum samples disagree at row {row}: event ids {classical} vs {quantum}")]
    Misaligned { row: usize, classical: u64, quantum: u64 },
    #[error("classical feature width {index} of the index differs from pool width {pool}")]
    PoolWidth { index: usize, pool: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    pub n_bins: usize,
    /// Skip pool events that belong to the index's own source sample.
    pub exclude_source: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { n_bins: 30, exclude_source: true }
    }
}

/// Bin counts scanned by default.
pub const DEFAULT_BIN_SCAN: [usize; 4] = [4, 10, 30, 60];

/// Ordered per-feature bin indices; renders as `"i0|i1|…"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KappaId(pub Vec<u16>);

impl fmt::Display for KappaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// `⌊(v + 1)·n/2⌋` clamped to `[0, n)`; `+1` falls in the top bin.
#[inline]
pub fn bin_index(v: f64, n_bins: usize) -> u16 {
    let raw = ((v + 1.0) * n_bins as f64 / 2.0).floor();
    if raw.is_nan() || raw < 0.0 {
        0
    } else {
        (raw as usize).min(n_bins - 1) as u16
    }
}

pub fn compute_kappa(features: &[f64], n_bins: usize) -> Result<KappaId, CqemError> {
    if n_bins < 2 {
        return Err(CqemError::TooFewBins(n_bins));
    }
    if n_bins > u16::MAX as usize {
        return Err(CqemError::DimensionMismatch { expected: u16::MAX as usize, found: n_bins });
    }
    Ok(KappaId(features.iter().map(|&v| bin_index(v, n_bins)).collect()))
}

pub fn resolution(n_bins: usize) -> f64 {
    1.0 - 1.0 / n_bins as f64
}

/// `log10` of the number of representable κ values, `p·log10(n_bins)`.
pub fn theoretical_state_count(n_bins: usize, p: usize) -> f64 {
    p as f64 * (n_bins as f64).log10()
}

/// Number of distinct κ in a dataset.
pub fn unique_kappa_count(dataset: &EventDataset, n_bins: usize) -> Result<usize, CqemError> {
    let kappas: Vec<KappaId> =
        dataset.events().par_iter().map(|e| compute_kappa(&e.features, n_bins)).collect::<Result<_, _>>()?;
    Ok(kappas.into_iter().collect::<BTreeSet<_>>().len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub vector: Vec<f64>,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchIndex {
    pub n_bins: usize,
    pub classical_dim: usize,
    pub quantum_dim: usize,
    pub feature_names: Option<Vec<String>>,
    pub entries: BTreeMap<KappaId, IndexEntry>,
    pub source_ids: BTreeSet<u64>,
}

impl MatchIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, kappa: &KappaId) -> Option<&IndexEntry> {
        self.entries.get(kappa)
    }
}

/// Sum in a fixed binary tree so the result does not depend on scheduling.
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

/// Componentwise mean of the rows; exact for identical rows.
pub fn unify(rows: &[&[f64]]) -> Vec<f64> {
    let q = rows.first().map_or(0, |r| r.len());
    let mut column = Vec::with_capacity(rows.len());
    (0..q)
        .map(|j| {
            column.clear();
            column.extend(rows.iter().map(|r| r[j]));
            if column.iter().all(|&v| v == column[0]) {
                column[0]
            } else {
                pairwise_sum(&column) / column.len() as f64
            }
        })
        .collect()
}

/// Groups the sample by κ of its classical features and averages the
/// matching quantum vectors. Both datasets must list the same events in the
/// same order. Labels are never read.
pub fn build_index(
    classical: &EventDataset,
    quantum: &EventDataset,
    config: &MatchConfig,
) -> Result<MatchIndex, CqemError> {
    if classical.len() != quantum.len() {
        return Err(CqemError::DimensionMismatch { expected: classical.len(), found: quantum.len() });
    }
    for (row, (c, q)) in classical.events().iter().zip(quantum.events()).enumerate() {
        if c.event_id != q.event_id {
            return Err(CqemError::Misaligned { row, classical: c.event_id, quantum: q.event_id });
        }
    }
    let kappas: Vec<KappaId> = classical
        .events()
        .par_iter()
        .map(|e| compute_kappa(&e.features, config.n_bins))
        .collect::<Result<_, _>>()?;
    let mut groups: BTreeMap<KappaId, Vec<usize>> = BTreeMap::new();
    for (i, k) in kappas.into_iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    let qevents = quantum.events();
    let groups: Vec<(KappaId, Vec<usize>)> = groups.into_iter().collect();
    let entries: BTreeMap<KappaId, IndexEntry> = groups
        .into_par_iter()
        .map(|(k, members)| {
            let rows: Vec<&[f64]> = members.iter().map(|&i| qevents[i].features.as_slice()).collect();
            (k, IndexEntry { vector: unify(&rows), members: members.len() })
        })
        .collect();
    Ok(MatchIndex {
        n_bins: config.n_bins,
        classical_dim: classical.feature_count(),
        quantum_dim: quantum.feature_count(),
        feature_names: quantum.feature_names().map(<[String]>::to_vec),
        entries,
        source_ids: classical.events().iter().map(|e| e.event_id).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub n_bins: usize,
    pub resolution: f64,
    pub unique_kappas: usize,
    /// Pool events considered after source exclusion.
    pub candidates: usize,
    pub matched: usize,
    pub match_rate: f64,
}

/// Keeps pool events whose κ is indexed, replacing their features by the
/// unified quantum vector. Timestamps, ids and labels come from the pool.
pub fn match_events(
    index: &MatchIndex,
    pool: &EventDataset,
    config: &MatchConfig,
) -> Result<(EventDataset, MatchReport), CqemError> {
    if pool.feature_count() != index.classical_dim {
        return Err(CqemError::PoolWidth { index: index.classical_dim, pool: pool.feature_count() });
    }
    let candidates: Vec<&TradeEvent> = pool
        .events()
        .iter()
        .filter(|e| !(config.exclude_source && index.source_ids.contains(&e.event_id)))
        .collect();
    let hits: Vec<Option<TradeEvent>> = candidates
        .par_iter()
        .map(|e| {
            let k = compute_kappa(&e.features, index.n_bins)?;
            Ok(index
                .get(&k)
                .map(|entry| TradeEvent::new(e.timestamp, e.event_id, entry.vector.clone(), e.label)))
        })
        .collect::<Result<_, CqemError>>()?;
    let events: Vec<TradeEvent> = hits.into_iter().flatten().collect();
    let report = MatchReport {
        n_bins: index.n_bins,
        resolution: resolution(index.n_bins),
        unique_kappas: index.len(),
        candidates: candidates.len(),
        matched: events.len(),
        match_rate: if candidates.is_empty() { 0.0 } else { events.len() as f64 / candidates.len() as f64 },
    };
    let dataset = EventDataset::new(index.quantum_dim, events, index.feature_names.clone(), "matched")
        .expect("pool order and unified widths are preserved");
    Ok((dataset, report))
}
