//! Event data model, CSV interchange and time windowing.
//!
//! A dataset is an immutable, time-ordered sequence of [`TradeEvent`]s that all
//! share the same feature dimension. Ordering is strict on
//! `(timestamp, event_id)`, so equal timestamps are legal as long as the ids
//! differ and appear in ascending order.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Microseconds since the epoch.
pub type Timestamp = i64;

pub const MICROS_PER_HOUR: i64 = 3_600_000_000;
pub const MICROS_PER_DAY: i64 = 24 * MICROS_PER_HOUR;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("row {row}: missing column `{column}`")]
    MissingColumn { row: usize, column: String },
    #[error("row {row}: events not strictly ordered by (timestamp, event_id)")]
    NonMonotonicTime { row: usize },
    #[error("row {row}: duplicate event_id {event_id}")]
    DuplicateEventId { row: usize, event_id: u64 },
    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}: label must be empty, 0 or 1")]
    NonBinaryLabel { row: usize },
    #[error("row {row}: cannot parse `{value}`")]
    Parse { row: usize, value: String },
    #[error("row {row}: non-finite feature value")]
    NonFinite { row: usize },
    #[error("inverted window: start {start} > end {end}")]
    InvertedWindow { start: Timestamp, end: Timestamp },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One timestamped market-state vector with an optional fill label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    pub timestamp: Timestamp,
    pub event_id: u64,
    pub features: Vec<f64>,
    pub label: Option<u8>,
}

impl TradeEvent {
    pub fn new(timestamp: Timestamp, event_id: u64, features: Vec<f64>, label: Option<u8>) -> Self {
        Self { timestamp, event_id, features, label }
    }

    fn order_key(&self) -> (Timestamp, u64) {
        (self.timestamp, self.event_id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDataset {
    events: Vec<TradeEvent>,
    feature_count: usize,
    feature_names: Option<Vec<String>>,
    provenance: String,
}

impl EventDataset {
    /// Validates and wraps a list of events. Errors report the index of the
    /// first offending event.
    pub fn new(
        feature_count: usize,
        events: Vec<TradeEvent>,
        feature_names: Option<Vec<String>>,
        provenance: impl Into<String>,
    ) -> Result<Self, DataError> {
        if let Some(names) = &feature_names {
            if names.len() != feature_count {
                return Err(DataError::RaggedRow {
                    row: 0,
                    expected: feature_count,
                    found: names.len(),
                });
            }
        }
        let mut seen = HashSet::with_capacity(events.len());
        for (row, ev) in events.iter().enumerate() {
            if ev.features.len() != feature_count {
                return Err(DataError::RaggedRow {
                    row,
                    expected: feature_count,
                    found: ev.features.len(),
                });
            }
            if ev.features.iter().any(|v| !v.is_finite()) {
                return Err(DataError::NonFinite { row });
            }
            if matches!(ev.label, Some(l) if l > 1) {
                return Err(DataError::NonBinaryLabel { row });
            }
            if row > 0 && events[row - 1].order_key() >= ev.order_key() {
                return Err(DataError::NonMonotonicTime { row });
            }
            if !seen.insert(ev.event_id) {
                return Err(DataError::DuplicateEventId { row, event_id: ev.event_id });
            }
        }
        Ok(Self { events, feature_count, feature_names, provenance: provenance.into() })
    }

    pub fn events(&self) -> &[TradeEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TradeEvent> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Returns a copy with a different provenance tag.
    pub fn with_provenance(&self, provenance: impl Into<String>) -> Self {
        Self { provenance: provenance.into(), ..self.clone() }
    }

    /// Column name for feature `i` (`f{i}` unless names were supplied).
    pub fn feature_name(&self, i: usize) -> String {
        match &self.feature_names {
            Some(names) => names[i].clone(),
            None => format!("f{i}"),
        }
    }

    pub fn labeled_count(&self) -> usize {
        self.events.iter().filter(|e| e.label.is_some()).count()
    }

    /// Index of the first event with `timestamp >= t`.
    pub fn lower_bound(&self, t: Timestamp) -> usize {
        self.events.partition_point(|e| e.timestamp < t)
    }

    /// Index one past the last event with `timestamp <= t`.
    pub fn upper_bound(&self, t: Timestamp) -> usize {
        self.events.partition_point(|e| e.timestamp <= t)
    }
}

/// Reads a dataset from CSV with header `timestamp,event_id,label,<features...>`.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<EventDataset, DataError> {
    let file = File::open(path)?;
    read_dataset(BufReader::new(file), "classical")
}

pub fn read_dataset<R: Read>(reader: R, provenance: &str) -> Result<EventDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    for (pos, col) in ["timestamp", "event_id", "label"].iter().enumerate() {
        if header.get(pos).map(str::trim) != Some(*col) {
            return Err(DataError::MissingColumn { row: 0, column: col.to_string() });
        }
    }
    let names: Vec<String> = header.iter().skip(3).map(|s| s.trim().to_string()).collect();
    let p = names.len();
    let default_names = names.iter().enumerate().all(|(i, n)| *n == format!("f{i}"));
    let feature_names = if default_names { None } else { Some(names) };

    let mut events = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != p + 3 {
            return Err(DataError::RaggedRow { row, expected: p + 3, found: record.len() });
        }
        let parse_err = |v: &str| DataError::Parse { row, value: v.to_string() };
        let timestamp: Timestamp = record[0].trim().parse().map_err(|_| parse_err(&record[0]))?;
        let event_id: u64 = record[1].trim().parse().map_err(|_| parse_err(&record[1]))?;
        let label = match record[2].trim() {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            _ => return Err(DataError::NonBinaryLabel { row }),
        };
        let features = record
            .iter()
            .skip(3)
            .map(|v| v.trim().parse::<f64>().map_err(|_| parse_err(v)))
            .collect::<Result<Vec<_>, _>>()?;
        events.push(TradeEvent { timestamp, event_id, features, label });
    }
    EventDataset::new(p, events, feature_names, provenance)
}

/// Formats a float with 17 significant digits, enough for an exact round-trip.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_dataset(dataset: &EventDataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_dataset(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset<W: Write>(dataset: &EventDataset, writer: W) -> Result<(), DataError> {
    let mut wtr = csv::WriterBuilder::new().from_writer(writer);
    let mut header = vec!["timestamp".to_string(), "event_id".to_string(), "label".to_string()];
    header.extend((0..dataset.feature_count()).map(|i| dataset.feature_name(i)));
    wtr.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for ev in dataset.events() {
        row.clear();
        row.push(ev.timestamp.to_string());
        row.push(ev.event_id.to_string());
        row.push(ev.label.map(|l| l.to_string()).unwrap_or_default());
        row.extend(ev.features.iter().map(|&v| format_f64(v)));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// All events with `t_start <= timestamp <= t_end`, order preserved.
pub fn slice_window(
    dataset: &EventDataset,
    t_start: Timestamp,
    t_end: Timestamp,
) -> Result<EventDataset, DataError> {
    if t_start > t_end {
        return Err(DataError::InvertedWindow { start: t_start, end: t_end });
    }
    let lo = dataset.lower_bound(t_start);
    let hi = dataset.upper_bound(t_end);
    Ok(EventDataset {
        events: dataset.events[lo..hi].to_vec(),
        feature_count: dataset.feature_count,
        feature_names: dataset.feature_names.clone(),
        provenance: dataset.provenance.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_events: usize,
    /// Fraction of positives among labeled events; `None` if nothing is labeled.
    pub label_rate: Option<f64>,
    /// Mean over consecutive pairs of the mean absolute per-feature difference.
    pub mean_step_change: f64,
    pub per_feature: Vec<FeatureStats>,
}

pub fn summarize(dataset: &EventDataset) -> Result<DatasetStats, DataError> {
    let events = dataset.events();
    let n = events.len();
    if n == 0 {
        return Err(DataError::EmptyDataset);
    }
    let p = dataset.feature_count();

    let (labeled, positives) = events
        .iter()
        .filter_map(|e| e.label)
        .fold((0usize, 0usize), |(n, k), l| (n + 1, k + l as usize));
    let label_rate = (labeled > 0).then(|| positives as f64 / labeled as f64);

    let mean_step_change = if n < 2 || p == 0 {
        0.0
    } else {
        let total: f64 = events
            .windows(2)
            .map(|w| {
                w[0].features
                    .iter()
                    .zip(&w[1].features)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    / p as f64
            })
            .sum();
        total / (n - 1) as f64
    };

    let per_feature = (0..p)
        .map(|j| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            let mut sum = 0.0;
            for e in events {
                let v = e.features[j];
                min = min.min(v);
                max = max.max(v);
                sum += v;
            }
            let mean = sum / n as f64;
            let std = if n > 1 {
                let ss: f64 = events.iter().map(|e| (e.features[j] - mean).powi(2)).sum();
                (ss / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            FeatureStats { min, max, mean, std }
        })
        .collect();

    Ok(DatasetStats { n_events: n, label_rate, mean_step_change, per_feature })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: i64, id: u64, f: &[f64], l: Option<u8>) -> TradeEvent {
        TradeEvent::new(t, id, f.to_vec(), l)
    }

    #[test]
    fn three_row_file_label_rate() {
        let csv = "timestamp,event_id,label,f0\n1,1,1,0.5\n2,2,0,0.1\n3,3,1,-0.2\n";
        let d = read_dataset(csv.as_bytes(), "classical").unwrap();
        assert_eq!(d.len(), 3);
        let s = summarize(&d).unwrap();
        assert_eq!(s.label_rate, Some(2.0 / 3.0));
    }

    #[test]
    fn duplicate_timestamp_and_id_rejected() {
        let csv = "timestamp,event_id,label,f0\n10,4,1,0.5\n10,4,0,0.1\n";
        let err = read_dataset(csv.as_bytes(), "classical").unwrap_err();
        assert!(matches!(err, DataError::NonMonotonicTime { row: 1 }), "{err:?}");
    }

    #[test]
    fn tie_on_timestamp_is_legal() {
        let csv = "timestamp,event_id,label,f0\n10,4,1,0.5\n10,5,0,0.1\n";
        assert_eq!(read_dataset(csv.as_bytes(), "classical").unwrap().len(), 2);
    }

    #[test]
    fn error_paths_name_rows() {
        let missing = "timestamp,id,label,f0\n";
        assert!(matches!(
            read_dataset(missing.as_bytes(), "c").unwrap_err(),
            DataError::MissingColumn { .. }
        ));
        let ragged = "timestamp,event_id,label,f0,f1\n1,1,1,0.5,0.2\n2,2,0,0.1\n";
        assert!(matches!(
            read_dataset(ragged.as_bytes(), "c").unwrap_err(),
            DataError::RaggedRow { row: 1, .. }
        ));
        let label = "timestamp,event_id,label,f0\n1,1,2,0.5\n";
        assert!(matches!(
            read_dataset(label.as_bytes(), "c").unwrap_err(),
            DataError::NonBinaryLabel { row: 0 }
        ));
        let backwards = "timestamp,event_id,label,f0\n5,1,1,0.5\n4,2,1,0.5\n";
        assert!(matches!(
            read_dataset(backwards.as_bytes(), "c").unwrap_err(),
            DataError::NonMonotonicTime { row: 1 }
        ));
    }

    #[test]
    fn unlabeled_cells_load_as_none() {
        let csv = "timestamp,event_id,label,f0\n1,1,,0.5\n2,2,1,0.1\n";
        let d = read_dataset(csv.as_bytes(), "c").unwrap();
        assert_eq!(d.events()[0].label, None);
        assert_eq!(summarize(&d).unwrap().label_rate, Some(1.0));
    }

    #[test]
    fn empty_dataset_writes_header_only() {
        let d = EventDataset::new(2, vec![], None, "c").unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "timestamp,event_id,label,f0,f1\n");
    }

    #[test]
    fn wide_dataset_column_count() {
        let d = EventDataset::new(216, vec![ev(0, 0, &[0.0; 216], Some(1))], None, "c").unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        let header = String::from_utf8(buf).unwrap();
        assert_eq!(header.lines().next().unwrap().split(',').count(), 219);
    }

    #[test]
    fn custom_feature_names_survive() {
        let csv = "timestamp,event_id,label,spread,size\n1,1,1,0.5,0.25\n";
        let d = read_dataset(csv.as_bytes(), "c").unwrap();
        assert_eq!(d.feature_names().unwrap(), ["spread", "size"]);
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("timestamp,event_id,label,spread,size"));
    }

    #[test]
    fn window_edges() {
        let d = EventDataset::new(
            1,
            (0..5).map(|i| ev(i * 10, i as u64, &[0.0], None)).collect(),
            None,
            "c",
        )
        .unwrap();
        assert_eq!(slice_window(&d, 0, 40).unwrap(), d);
        assert!(slice_window(&d, 41, 42).unwrap().is_empty());
        assert_eq!(slice_window(&d, 10, 30).unwrap().len(), 3);
        assert!(matches!(slice_window(&d, 5, 4), Err(DataError::InvertedWindow { .. })));
    }

    #[test]
    fn step_change_hand_computed() {
        let same = EventDataset::new(
            2,
            vec![ev(0, 0, &[0.3, 0.4], None), ev(1, 1, &[0.3, 0.4], None)],
            None,
            "c",
        )
        .unwrap();
        assert_eq!(summarize(&same).unwrap().mean_step_change, 0.0);
        let unit = EventDataset::new(
            2,
            vec![ev(0, 0, &[0.0, 0.0], None), ev(1, 1, &[1.0, 1.0], None)],
            None,
            "c",
        )
        .unwrap();
        assert_eq!(summarize(&unit).unwrap().mean_step_change, 1.0);
        assert!(matches!(
            summarize(&EventDataset::new(1, vec![], None, "c").unwrap()),
            Err(DataError::EmptyDataset)
        ));
    }

    #[test]
    fn stats_json_key_names() {
        let d = EventDataset::new(1, vec![ev(0, 0, &[0.5], Some(1))], None, "c").unwrap();
        let v = serde_json::to_value(summarize(&d).unwrap()).unwrap();
        for key in ["n_events", "label_rate", "mean_step_change", "per_feature"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
