use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{aicity_overlap_score, mean_ap, precision_recall_f1, AiCityOptions, GroundTruthSegment, DEFAULT_TIOUS};
use crate::error::{Error, Result};
use crate::io::{action_name, PredictionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Map,
    Aicity,
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "map" => Ok(Protocol::Map),
            "aicity" => Ok(Protocol::Aicity),
            other => Err(Error::config(format!("unknown protocol `{other}` (expected map|aicity)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub tious: Vec<f64>,
    /// tIoU used for precision / recall / F1.
    pub prf_tiou: f64,
    pub prf_score_min: f64,
    pub aicity: AiCityOptions,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            tious: DEFAULT_TIOUS.to_vec(),
            prf_tiou: 0.5,
            prf_score_min: 0.5,
            aicity: AiCityOptions::default(),
        }
    }
}

/// Machine-readable evaluation result. Field names are the JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub videos: usize,
    pub ground_truth: usize,
    pub predictions: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tious: Option<Vec<f64>>,
    /// Label (as a string key) to AP per tIoU.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_class_ap: Option<std::collections::BTreeMap<String, Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub map_per_tiou: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub avg_map: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f1: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aicity_score: Option<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-readable summary table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "protocol: {:?}  videos: {}  ground truth: {}  predictions: {}",
            self.protocol, self.videos, self.ground_truth, self.predictions
        );
        if let (Some(tious), Some(per_class), Some(maps)) = (&self.tious, &self.per_class_ap, &self.map_per_tiou) {
            let _ = write!(s, "{:<36}", "class");
            for t in tious {
                let _ = write!(s, " tIoU={t:.1}");
            }
            s.push('\n');
            let mut rows: Vec<(u32, &String, &Vec<f64>)> =
                per_class.iter().map(|(k, v)| (k.parse().unwrap_or(u32::MAX), k, v)).collect();
            rows.sort_by_key(|r| r.0);
            for (id, label, aps) in rows {
                let name = action_name(id).unwrap_or("");
                let _ = write!(s, "{:<36}", format!("{label:>2} {name}"));
                for ap in aps {
                    let _ = write!(s, " {:>8.4}", ap);
                }
                s.push('\n');
            }
            let _ = write!(s, "{:<36}", "mAP");
            for m in maps {
                let _ = write!(s, " {:>8.4}", m);
            }
            s.push('\n');
        }
        if let Some(avg) = self.avg_map {
            let _ = writeln!(s, "average mAP: {avg:.4}");
        }
        if let (Some(p), Some(r), Some(f)) = (self.precision, self.recall, self.f1) {
            let _ = writeln!(s, "precision: {p:.4}  recall: {r:.4}  F1: {f:.4}");
        }
        let _ = writeln!(s, "TP: {}  FP: {}  FN: {}", self.tp, self.fp, self.fn_);
        if let Some(score) = self.aicity_score {
            let _ = writeln!(s, "AI City overlap score: {score:.4}");
        }
        s
    }
}

/// Evaluates predictions against ground truth under one protocol.
///
/// Predictions for videos without ground truth are dropped with a warning;
/// if none of the predicted videos has ground truth the inputs are rejected.
pub fn evaluate(preds: &[PredictionRecord], gts: &[GroundTruthSegment], protocol: Protocol, opts: &EvalOptions) -> Result<EvalReport> {
    if gts.is_empty() {
        return Err(Error::EvalInput("no ground truth".into()));
    }
    let gt_videos: BTreeSet<&str> = gts.iter().map(|g| g.video_id.as_str()).collect();
    let pred_videos: BTreeSet<&str> = preds.iter().map(|p| p.video_id.as_str()).collect();
    if !pred_videos.is_empty() && pred_videos.is_disjoint(&gt_videos) {
        return Err(Error::EvalInput("predictions and ground truth share no video_id".into()));
    }
    let unknown: Vec<&str> = pred_videos.difference(&gt_videos).copied().collect();
    if !unknown.is_empty() {
        log::warn!("ignoring predictions for {} video(s) without ground truth", unknown.len());
    }
    let preds: Vec<PredictionRecord> = preds
        .iter()
        .filter(|p| gt_videos.contains(p.video_id.as_str()))
        .cloned()
        .collect();

    let mut report = EvalReport {
        protocol,
        videos: gt_videos.len(),
        ground_truth: gts.len(),
        predictions: preds.len(),
        tious: None,
        per_class_ap: None,
        map_per_tiou: None,
        avg_map: None,
        precision: None,
        recall: None,
        f1: None,
        tp: 0,
        fp: 0,
        fn_: 0,
        aicity_score: None,
    };
    match protocol {
        Protocol::Map => {
            let m = mean_ap(&preds, gts, &opts.tious)?;
            let prf = precision_recall_f1(&preds, gts, opts.prf_tiou, opts.prf_score_min);
            report.tious = Some(m.tious);
            report.per_class_ap = Some(m.per_class.into_iter().map(|(l, v)| (l.to_string(), v)).collect());
            report.map_per_tiou = Some(m.map_per_tiou);
            report.avg_map = Some(m.avg_map);
            report.precision = Some(prf.precision);
            report.recall = Some(prf.recall);
            report.f1 = Some(prf.f1);
            report.tp = prf.tp;
            report.fp = prf.fp;
            report.fn_ = prf.fn_;
        }
        Protocol::Aicity => {
            let a = aicity_overlap_score(&preds, gts, &opts.aicity);
            report.aicity_score = Some(a.score);
            report.tp = a.matched;
            report.fp = a.unmatched_pred;
            report.fn_ = a.unmatched_gt;
        }
    }
    Ok(report)
}
