//! Fusion of detections coming from several models.
//!
//! Each source first contributes only its best detection per
//! `(video_id, label)`; the survivors sharing a `(video_id, label)` are then
//! merged by averaging their boundaries, either plainly or weighted by score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::PredictionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    Mean,
    Weighted,
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(FusionMode::Mean),
            "weighted" => Ok(FusionMode::Weighted),
            other => Err(Error::config(format!("unknown fusion mode `{other}` (expected mean|weighted)"))),
        }
    }
}

/// A prediction tagged with the model that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcedPrediction {
    pub source: usize,
    pub pred: PredictionRecord,
}

/// Segments `(start, end, score)` sharing one video and label.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGroup {
    pub video_id: String,
    pub label: u32,
    pub members: Vec<(f64, f64, f64)>,
}

/// Best-scoring prediction per `(source, video_id, label)`; ties go to the
/// earlier start, then the earlier end. Output is in key order.
pub fn select_top_per_source(preds: &[SourcedPrediction]) -> Vec<SourcedPrediction> {
    let mut best: BTreeMap<(usize, &str, u32), &SourcedPrediction> = BTreeMap::new();
    for p in preds {
        let key = (p.source, p.pred.video_id.as_str(), p.pred.label);
        match best.get(&key) {
            Some(cur) if !beats(&p.pred, &cur.pred) => {}
            _ => {
                best.insert(key, p);
            }
        }
    }
    best.into_values().cloned().collect()
}

fn beats(a: &PredictionRecord, b: &PredictionRecord) -> bool {
    a.score
        .total_cmp(&b.score)
        .then(b.t_start.total_cmp(&a.t_start))
        .then(b.t_end.total_cmp(&a.t_end))
        .is_gt()
}

/// Groups by `(video_id, label)`; members keep source order.
pub fn group_predictions(preds: &[SourcedPrediction]) -> Vec<PredictionGroup> {
    let mut groups: BTreeMap<(&str, u32), Vec<&SourcedPrediction>> = BTreeMap::new();
    for p in preds {
        groups.entry((p.pred.video_id.as_str(), p.pred.label)).or_default().push(p);
    }
    groups
        .into_iter()
        .map(|((video_id, label), mut members)| {
            members.sort_by_key(|p| p.source);
            PredictionGroup {
                video_id: video_id.to_string(),
                label,
                members: members.iter().map(|p| (p.pred.t_start, p.pred.t_end, p.pred.score)).collect(),
            }
        })
        .collect()
}

/// Arithmetic mean of starts and ends.
pub fn fuse_mean(group: &PredictionGroup) -> (f64, f64) {
    let n = group.members.len() as f64;
    let (s, e) = group.members.iter().fold((0.0, 0.0), |(s, e), m| (s + m.0, e + m.1));
    (s / n, e / n)
}

/// Score-weighted mean of starts and ends; the fused score is the best
/// member score. Falls back to [`fuse_mean`] when all scores are zero.
pub fn fuse_weighted(group: &PredictionGroup) -> (f64, f64, f64) {
    let top = max_score(group);
    let total: f64 = group.members.iter().map(|m| m.2).sum();
    if total <= 0.0 {
        log::warn!(
            "video `{}` label {}: all member scores are zero, using the unweighted mean",
            group.video_id,
            group.label
        );
        let (s, e) = fuse_mean(group);
        return (s, e, top);
    }
    let (s, e) = group
        .members
        .iter()
        .fold((0.0, 0.0), |(s, e), m| (s + m.0 * m.2, e + m.1 * m.2));
    (s / total, e / total, top)
}

fn max_score(group: &PredictionGroup) -> f64 {
    group.members.iter().map(|m| m.2).fold(f64::NEG_INFINITY, f64::max)
}

/// Per-source filtering, grouping and fusion; one output per `(video_id, label)`.
pub fn ensemble(preds: &[SourcedPrediction], mode: FusionMode) -> Vec<PredictionRecord> {
    let top = select_top_per_source(preds);
    group_predictions(&top)
        .into_iter()
        .filter(|g| !g.members.is_empty())
        .map(|g| {
            let (t_start, t_end, score) = match mode {
                FusionMode::Mean => {
                    let (s, e) = fuse_mean(&g);
                    (s, e, max_score(&g))
                }
                FusionMode::Weighted => fuse_weighted(&g),
            };
            PredictionRecord {
                video_id: g.video_id,
                label: g.label,
                t_start,
                t_end,
                score,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(source: usize, video: &str, label: u32, s: f64, e: f64, score: f64) -> SourcedPrediction {
        SourcedPrediction {
            source,
            pred: PredictionRecord {
                video_id: video.into(),
                label,
                t_start: s,
                t_end: e,
                score,
            },
        }
    }

    fn group(members: Vec<(f64, f64, f64)>) -> PredictionGroup {
        PredictionGroup {
            video_id: "v".into(),
            label: 1,
            members,
        }
    }

    #[test]
    fn top_per_source() {
        let preds = vec![sp(0, "v", 1, 0.0, 1.0, 0.7), sp(0, "v", 1, 5.0, 6.0, 0.9)];
        let top = select_top_per_source(&preds);
        assert_eq!(top, vec![preds[1].clone()]);
        let distinct = vec![sp(0, "v", 1, 0.0, 1.0, 0.7), sp(0, "v", 2, 0.0, 1.0, 0.7), sp(1, "v", 1, 0.0, 1.0, 0.7)];
        assert_eq!(select_top_per_source(&distinct).len(), 3);
        assert!(select_top_per_source(&[]).is_empty());
        // tie on score: earlier start wins
        let tie = vec![sp(0, "v", 1, 3.0, 4.0, 0.8), sp(0, "v", 1, 1.0, 4.0, 0.8)];
        assert_eq!(select_top_per_source(&tie)[0].pred.t_start, 1.0);
    }

    #[test]
    fn mean_fusion() {
        assert_eq!(fuse_mean(&group(vec![(2.0, 10.0, 0.5), (4.0, 14.0, 0.9)])), (3.0, 12.0));
        assert_eq!(fuse_mean(&group(vec![(2.5, 7.0, 0.5)])), (2.5, 7.0));
        assert_eq!(fuse_mean(&group(vec![(1.5, 3.0, 0.5); 3])), (1.5, 3.0));
    }

    #[test]
    fn weighted_fusion() {
        assert_eq!(fuse_weighted(&group(vec![(2.0, 10.0, 1.0), (4.0, 14.0, 3.0)])), (3.5, 13.0, 3.0));
        let (s, e, score) = fuse_weighted(&group(vec![(2.0, 10.0, 0.0), (4.0, 14.0, 0.6)]));
        assert!((s - 4.0).abs() < 1e-12 && (e - 14.0).abs() < 1e-12 && score == 0.6);
        assert_eq!(fuse_weighted(&group(vec![(2.0, 10.0, 0.0), (4.0, 14.0, 0.0)])), (3.0, 12.0, 0.0));
    }

    #[test]
    fn one_output_per_video_and_label() {
        let preds = vec![
            sp(0, "a", 1, 2.0, 10.0, 0.6),
            sp(0, "a", 1, 30.0, 40.0, 0.2),
            sp(1, "a", 1, 4.0, 14.0, 0.9),
            sp(1, "b", 3, 1.0, 2.0, 0.7),
        ];
        let fused = ensemble(&preds, FusionMode::Mean);
        assert_eq!(fused.len(), 2);
        assert_eq!((fused[0].t_start, fused[0].t_end, fused[0].score), (3.0, 12.0, 0.9));
        assert_eq!(fused[1].video_id, "b");
    }
}
