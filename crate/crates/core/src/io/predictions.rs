use std::path::Path;

use serde::Deserialize;

use super::{fixed6, read_bytes, write_bytes, NUM_ACTION_CLASSES};
use crate::error::{Error, Result};

/// One detection of one video; a line of the prediction file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub video_id: String,
    pub label: u32,
    pub t_start: f64,
    pub t_end: f64,
    pub score: f64,
}

impl PredictionRecord {
    fn check(&self) -> std::result::Result<(), String> {
        if ![self.t_start, self.t_end, self.score].iter().all(|v| v.is_finite()) {
            return Err("non-finite value".into());
        }
        if self.t_start < 0.0 || self.t_end < 0.0 {
            return Err("negative time".into());
        }
        if self.t_start > self.t_end {
            return Err(format!("t_start {} > t_end {}", self.t_start, self.t_end));
        }
        if !(1..=NUM_ACTION_CLASSES).contains(&self.label) {
            return Err(format!("unknown label id {}", self.label));
        }
        Ok(())
    }
}

/// Canonical order: `(video_id, t_start, label)`, then score descending, then `t_end`.
pub fn sort_predictions(preds: &mut [PredictionRecord]) {
    preds.sort_by(|a, b| {
        a.video_id
            .cmp(&b.video_id)
            .then(a.t_start.total_cmp(&b.t_start))
            .then(a.label.cmp(&b.label))
            .then(b.score.total_cmp(&a.score))
            .then(a.t_end.total_cmp(&b.t_end))
    });
}

/// JSON-lines text, one object per record, in canonical order.
pub fn format_predictions_jsonl(preds: &[PredictionRecord]) -> String {
    let mut sorted = preds.to_vec();
    sort_predictions(&mut sorted);
    let mut out = String::new();
    for p in &sorted {
        out.push_str(&format!(
            "{{\"video_id\":{},\"label\":{},\"t_start\":{},\"t_end\":{},\"score\":{}}}\n",
            serde_json::to_string(&p.video_id).expect("string serializes"),
            p.label,
            fixed6(p.t_start),
            fixed6(p.t_end),
            fixed6(p.score)
        ));
    }
    out
}

pub fn parse_predictions_jsonl(text: &str, label: &str) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord = serde_json::from_str(line)
            .map_err(|e| Error::format(label, format!("line {line_no}: malformed prediction: {e}")))?;
        rec.check().map_err(|m| Error::data(format!("{label}: line {line_no}: {m}")))?;
        out.push(rec);
    }
    Ok(out)
}

const CSV_HEADER: [&str; 5] = ["video_id", "label", "t_start", "t_end", "score"];

pub fn format_predictions_csv(preds: &[PredictionRecord]) -> String {
    let mut sorted = preds.to_vec();
    sort_predictions(&mut sorted);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for p in &sorted {
        w.write_record([
            p.video_id.clone(),
            p.label.to_string(),
            fixed6(p.t_start),
            fixed6(p.t_end),
            fixed6(p.score),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn parse_predictions_csv(text: &str, label: &str) -> Result<Vec<PredictionRecord>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r
        .headers()
        .map_err(|e| Error::format(label, format!("line 1: {e}")))?
        .clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(Error::format(label, format!("line 1: expected header {}", CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for row in r.deserialize::<PredictionRecord>() {
        let rec = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::format(label, format!("line {line}: malformed prediction: {e}"))
        })?;
        rec.check().map_err(|m| Error::data(format!("{label}: {}: {m}", rec.video_id)))?;
        out.push(rec);
    }
    Ok(out)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads JSON-lines, or CSV when the extension is `.csv`.
pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let bytes = read_bytes(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::format(&label, format!("not UTF-8: {e}")))?;
    if is_csv(path) {
        parse_predictions_csv(&text, &label)
    } else {
        parse_predictions_jsonl(&text, &label)
    }
}

/// Writes JSON-lines, or CSV when the extension is `.csv`.
pub fn write_predictions(path: impl AsRef<Path>, preds: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let text = if is_csv(path) {
        format_predictions_csv(preds)
    } else {
        format_predictions_jsonl(preds)
    };
    write_bytes(path, text.as_bytes())
}
