//! Report files: records table, summary JSON, decay plot and feature
//! histograms. Output bytes depend only on the result.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{compare_sources, format_diff, BacktestError, BacktestResult};
use crate::data::format_f64;

pub const RECORDS_HEADER: [&str; 14] = [
    "source",
    "model",
    "training_size",
    "anchor",
    "train_start",
    "train_end",
    "event_id",
    "timestamp",
    "delta",
    "bucket",
    "grid_cell",
    "model_checksum",
    "probability",
    "label",
];

const BAND_POPULATION: &str = "evaluation groups (anchor day × training size) within a bucket";

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Writes `records.csv`, `summary.json`, `decay.svg`, `feature_hist.svg` and
/// returns their paths.
pub fn emit_report(result: &BacktestResult, out_dir: &Path) -> Result<Vec<PathBuf>, BacktestError> {
    fs::create_dir_all(out_dir)?;
    let records = out_dir.join("records.csv");
    let mut wtr = csv::Writer::from_path(&records).map_err(|e| std::io::Error::other(e.to_string()))?;
    let csv_err = |e: csv::Error| std::io::Error::other(e.to_string());
    wtr.write_record(RECORDS_HEADER).map_err(csv_err)?;
    for r in &result.records {
        wtr.write_record([
            r.source.clone(),
            r.model.label().to_string(),
            r.training_size.to_string(),
            r.anchor.to_string(),
            r.train_start.to_string(),
            r.train_end.to_string(),
            r.event_id.to_string(),
            r.timestamp.to_string(),
            r.delta.to_string(),
            r.bucket.to_string(),
            r.grid_cell.to_string(),
            r.model_checksum.clone(),
            format_f64(r.probability),
            r.label.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush()?;

    let summary = out_dir.join("summary.json");
    fs::write(&summary, serde_json::to_string_pretty(&summary_json(result))?)?;
    let decay = out_dir.join("decay.svg");
    fs::write(&decay, svg_decay(result))?;
    let hist = out_dir.join("feature_hist.svg");
    fs::write(&hist, svg_feature_hist(result))?;
    Ok(vec![records, summary, decay, hist])
}

fn summary_json(result: &BacktestResult) -> serde_json::Value {
    if result.summary.is_empty() {
        return json!({});
    }
    let baseline = result.sources.first().cloned().unwrap_or_default();
    let comparison = compare_sources(result, &baseline).unwrap_or_default();
    json!({
        "band_population": BAND_POPULATION,
        "groups": result.summary,
        "baseline": baseline,
        "comparison": comparison,
        "skipped": result.skipped.len(),
        "table": render_table(result, &baseline),
    })
}

/// Median test AUC per model and source for buckets 0 and 1, with the
/// difference to `baseline` in percentage points.
pub fn render_table(result: &BacktestResult, baseline: &str) -> String {
    let shown: Vec<u32> = result.buckets.iter().copied().filter(|b| *b <= 1).collect();
    let head: Vec<String> = shown.iter().map(|b| format!("{b}d")).collect();
    let head = head.join(" / ");
    let mut out = String::new();
    let _ = write!(out, "| Model |");
    for s in &result.sources {
        let _ = write!(out, " {s} ({head}) |");
        if s != baseline {
            let _ = write!(out, " Diff. to {baseline} |");
        }
    }
    out.push('\n');
    let cols = result.sources.len() * 2 - usize::from(result.sources.iter().any(|s| s == baseline));
    out.push_str(&format!("|---|{}\n", "---|".repeat(cols)));
    let comparison = compare_sources(result, baseline).unwrap_or_default();
    for &m in &result.families {
        let _ = write!(out, "| {} |", m.label());
        for s in &result.sources {
            let cells: Vec<String> = shown
                .iter()
                .map(|&b| match result.stats(s, m, b) {
                    Some(g) => format!("{:.2} ± {:.2}", g.median, g.std),
                    None => "–".into(),
                })
                .collect();
            let _ = write!(out, " {} |", cells.join(" / "));
            if s != baseline {
                let diffs: Vec<String> = shown
                    .iter()
                    .map(|&b| {
                        comparison
                            .iter()
                            .find(|r| &r.source == s && r.model == m && r.bucket == b)
                            .map_or_else(|| "–".into(), |r| format_diff(r.diff_pp))
                    })
                    .collect();
                let _ = write!(out, " {} |", diffs.join(" / "));
            }
        }
        out.push('\n');
    }
    out
}

fn svg_header(w: u32, h: u32, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{title}</text>\n",
        w / 2
    )
}

/// Mean test AUC per bucket, one line per (source, model), shaded ±1 std.
pub fn svg_decay(result: &BacktestResult) -> String {
    let (w, h) = (720u32, 420u32);
    let (left, right, top, bottom) = (60.0, 170.0, 30.0, 50.0);
    let pw = w as f64 - left - right;
    let ph = h as f64 - top - bottom;
    let buckets = &result.buckets;
    let (b_min, b_max) = (
        buckets.iter().copied().min().unwrap_or(0) as f64,
        buckets.iter().copied().max().unwrap_or(1).max(1) as f64,
    );
    let span = (b_max - b_min).max(1.0);
    let (y_lo, y_hi) = (0.3, 1.0);
    let sx = |b: f64| left + (b - b_min) / span * pw;
    let sy = |v: f64| top + (1.0 - (v.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo)) * ph;

    let mut out = svg_header(w, h, "Test AUC by blinding window");
    let _ = writeln!(
        out,
        "<g stroke=\"#999\"><line x1=\"{left}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\"/>\
         <line x1=\"{left}\" y1=\"{top}\" x2=\"{left}\" y2=\"{:.1}\"/></g>",
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    for &b in buckets {
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{b}d</text>", sx(b as f64), top + ph + 16.0);
    }
    for k in 0..=7 {
        let v = y_lo + k as f64 * 0.1;
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.1}</text>", left - 6.0, sy(v) + 4.0);
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">blinding window (trading days); bands: ±1 std across {BAND_POPULATION}</text>",
        left + pw / 2.0,
        h as f64 - 12.0
    );
    let mut series = 0usize;
    for s in &result.sources {
        for &m in &result.families {
            let color = PALETTE[series % PALETTE.len()];
            let pts: Vec<(f64, f64, f64)> = buckets
                .iter()
                .filter_map(|&b| result.stats(s, m, b).map(|g| (b as f64, g.mean, g.std)))
                .collect();
            let upper: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1 + p.2))).collect();
            let lower: Vec<String> = pts.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1 - p.2))).collect();
            if !pts.is_empty() {
                let _ = writeln!(
                    out,
                    "<polygon class=\"band\" points=\"{} {}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
                    upper.join(" "),
                    lower.join(" ")
                );
            }
            let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
            let _ = writeln!(
                out,
                "<polyline class=\"series\" data-source=\"{s}\" data-model=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                m.label(),
                line.join(" ")
            );
            let ly = top + 14.0 * series as f64;
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
                 <text x=\"{:.1}\" y=\"{:.1}\">{s} {}</text>",
                left + pw + 10.0,
                left + pw + 30.0,
                left + pw + 34.0,
                ly + 4.0,
                m.label()
            );
            series += 1;
        }
    }
    out.push_str("</svg>\n");
    out
}

/// One panel per source with the pooled feature-value histogram.
pub fn svg_feature_hist(result: &BacktestResult) -> String {
    let panel_w = 300.0;
    let (panel_h, gap, top) = (200.0, 20.0, 30.0);
    let n = result.histograms.len().max(1);
    let w = (n as f64 * (panel_w + gap) + gap) as u32;
    let h = (top + panel_h + 50.0) as u32;
    let mut out = svg_header(w, h, "Feature value distributions");
    for (i, hist) in result.histograms.iter().enumerate() {
        let x0 = gap + i as f64 * (panel_w + gap);
        let total: u64 = hist.counts.iter().sum();
        let max = hist.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bw = panel_w / hist.counts.len().max(1) as f64;
        let _ = writeln!(out, "<g class=\"panel\" data-source=\"{}\">", hist.source);
        for (k, &c) in hist.counts.iter().enumerate() {
            let bh = c as f64 / max * panel_h;
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                x0 + k as f64 * bw,
                top + panel_h - bh,
                (bw - 0.5).max(0.1),
                bh,
                PALETTE[i % PALETTE.len()]
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{} (n={total}, median {:.3}, IQR {:.3})</text>",
            x0 + panel_w / 2.0,
            top + panel_h + 16.0,
            hist.source,
            hist.median,
            hist.iqr
        );
        let _ = writeln!(
            out,
            "<text x=\"{x0:.1}\" y=\"{:.1}\">{:.0}</text><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.0}</text>",
            top + panel_h + 32.0,
            hist.lo,
            x0 + panel_w,
            top + panel_h + 32.0,
            hist.hi
        );
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_result_files() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&BacktestResult::default(), dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("records.csv")).unwrap();
        assert_eq!(csv, format!("{}\n", RECORDS_HEADER.join(",")));
        assert_eq!(fs::read_to_string(dir.path().join("summary.json")).unwrap(), "{}");
    }
}
