use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::GroundTruthSegment;
use crate::error::{Error, Result};
use crate::io::PredictionRecord;
use crate::postprocess::temporal_iou;

pub const DEFAULT_TIOUS: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Score descending, then earlier start, then video id and end.
fn rank(a: &PredictionRecord, b: &PredictionRecord) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.t_start.total_cmp(&b.t_start))
        .then(a.video_id.cmp(&b.video_id))
        .then(a.t_end.total_cmp(&b.t_end))
}

/// Greedy one-to-one matching of `dets` (already ranked, single label)
/// against `gts` of the same label. Each detection takes the unmatched GT
/// of its video with the highest tIoU that reaches `tiou`.
fn greedy_match(dets: &[&PredictionRecord], gts: &[&GroundTruthSegment], tiou: f64) -> Vec<Option<usize>> {
    let mut by_video: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_video.entry(g.video_id.as_str()).or_default().push(i);
    }
    let mut taken = vec![false; gts.len()];
    dets.iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            for &gi in by_video.get(d.video_id.as_str()).into_iter().flatten() {
                if taken[gi] {
                    continue;
                }
                let iou = temporal_iou((d.t_start, d.t_end), (gts[gi].start, gts[gi].end));
                if iou >= tiou && best.is_none_or(|(_, b)| iou > b) {
                    best = Some((gi, iou));
                }
            }
            let hit = best.map(|(gi, _)| gi);
            if let Some(gi) = hit {
                taken[gi] = true;
            }
            hit
        })
        .collect()
}

fn ranked_for_label(dets: &[PredictionRecord], label: u32) -> Vec<&PredictionRecord> {
    let mut v: Vec<_> = dets.iter().filter(|d| d.label == label).collect();
    v.sort_by(|a, b| rank(a, b));
    v
}

/// Area under the precision envelope for one label at one tIoU threshold.
///
/// `None` when the label has no ground truth.
pub fn average_precision(dets: &[PredictionRecord], gts: &[GroundTruthSegment], label: u32, tiou: f64) -> Option<f64> {
    let gts: Vec<_> = gts.iter().filter(|g| g.label == label).collect();
    if gts.is_empty() {
        return None;
    }
    let dets = ranked_for_label(dets, label);
    let matches = greedy_match(&dets, &gts, tiou);

    let n_gt = gts.len() as f64;
    let mut tp = 0.0;
    let mut precision = Vec::with_capacity(matches.len() + 2);
    let mut recall = Vec::with_capacity(matches.len() + 2);
    precision.push(0.0);
    recall.push(0.0);
    for (k, m) in matches.iter().enumerate() {
        if m.is_some() {
            tp += 1.0;
        }
        precision.push(tp / (k + 1) as f64);
        recall.push(tp / n_gt);
    }
    precision.push(0.0);
    recall.push(1.0);
    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let ap = (1..recall.len())
        .filter(|&i| recall[i] != recall[i - 1])
        .map(|i| (recall[i] - recall[i - 1]) * precision[i])
        .sum();
    Some(ap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub tious: Vec<f64>,
    /// AP per tIoU for every label that has ground truth.
    pub per_class: BTreeMap<u32, Vec<f64>>,
    pub map_per_tiou: Vec<f64>,
    pub avg_map: f64,
}

/// Class-mean AP at each threshold and its average over thresholds.
/// Labels without ground truth are left out of the means.
pub fn mean_ap(dets: &[PredictionRecord], gts: &[GroundTruthSegment], tious: &[f64]) -> Result<MapSummary> {
    if gts.is_empty() {
        return Err(Error::EvalInput("no ground truth".into()));
    }
    if tious.is_empty() {
        return Err(Error::config("no tIoU thresholds"));
    }
    let labels: BTreeSet<u32> = gts.iter().map(|g| g.label).collect();
    let per_class: BTreeMap<u32, Vec<f64>> = labels
        .iter()
        .map(|&l| {
            let aps = tious
                .iter()
                .map(|&t| average_precision(dets, gts, l, t).expect("label has ground truth"))
                .collect();
            (l, aps)
        })
        .collect();
    let map_per_tiou: Vec<f64> = (0..tious.len())
        .map(|i| per_class.values().map(|aps| aps[i]).sum::<f64>() / per_class.len() as f64)
        .collect();
    let avg_map = map_per_tiou.iter().sum::<f64>() / map_per_tiou.len() as f64;
    Ok(MapSummary {
        tious: tious.to_vec(),
        per_class,
        map_per_tiou,
        avg_map,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrfSummary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Precision, recall and F1 of the detections scoring at least `score_min`,
/// matched per label with the same greedy rule as AP. Ratios with a zero
/// denominator are 0.
pub fn precision_recall_f1(dets: &[PredictionRecord], gts: &[GroundTruthSegment], tiou: f64, score_min: f64) -> PrfSummary {
    let kept: Vec<PredictionRecord> = dets.iter().filter(|d| d.score >= score_min).cloned().collect();
    let labels: BTreeSet<u32> = gts.iter().map(|g| g.label).chain(kept.iter().map(|d| d.label)).collect();
    let mut tp = 0;
    for &l in &labels {
        let ranked = ranked_for_label(&kept, l);
        let label_gts: Vec<_> = gts.iter().filter(|g| g.label == l).collect();
        tp += greedy_match(&ranked, &label_gts, tiou).iter().filter(|m| m.is_some()).count();
    }
    let fp = kept.len() - tp;
    let fn_ = gts.len() - tp;
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    PrfSummary {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    }
}
