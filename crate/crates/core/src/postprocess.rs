//! From raw head outputs to timestamped detections.
//!
//! Order of stages: score threshold and top-k, boundary decoding, minimum
//! duration, per-class NMS, grid-to-seconds conversion, final score filter.
//! Every sort carries a complete tie-break so results do not depend on the
//! order candidates arrive in.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ForwardOutput, Point, RawPrediction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessConfig {
    pub pre_nms_thresh: f64,
    pub pre_nms_topk: usize,
    /// Minimum `right - left`, in chunks (inclusive).
    pub min_duration: f64,
    pub nms_iou: f64,
    /// Final detections must score strictly above this. The pipeline table
    /// lists 0.2 as minimum confidence while the prose keeps detections
    /// exceeding 0.5; 0.5 is the default.
    pub min_score: f64,
    pub feat_stride: usize,
    pub frames_per_chunk: usize,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        Self {
            pre_nms_thresh: 0.2,
            pre_nms_topk: 5000,
            min_duration: 0.0,
            nms_iou: 0.5,
            min_score: 0.5,
            feat_stride: 16,
            frames_per_chunk: 16,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.pre_nms_thresh) {
            return Err(Error::config(format!("pre-NMS threshold {} outside [0, 1]", self.pre_nms_thresh)));
        }
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return Err(Error::config(format!("NMS IoU {} outside (0, 1]", self.nms_iou)));
        }
        if !(0.0..=1.0).contains(&self.min_score) {
            return Err(Error::config(format!("min score {} outside [0, 1]", self.min_score)));
        }
        if !(self.min_duration >= 0.0) {
            return Err(Error::config("min duration must be >= 0"));
        }
        if self.feat_stride == 0 || self.frames_per_chunk == 0 {
            return Err(Error::config("feat_stride and frames_per_chunk must be positive"));
        }
        Ok(())
    }
}

/// A (point, class) pair that passed the score threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub level: usize,
    pub index: usize,
    /// Zero-based class index; the label is `class + 1`.
    pub class: usize,
    pub score: f64,
    pub point: Point,
    pub offset_left: f32,
    pub offset_right: f32,
}

/// A decoded segment in base-grid chunk units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSegment {
    pub left: f64,
    pub right: f64,
    pub label: u32,
    pub score: f64,
}

/// A final detection in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub t_start: f64,
    pub t_end: f64,
    pub label: u32,
    pub score: f64,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sigmoid scores, threshold, then the global top-k.
///
/// The threshold is applied to logits (`logit >= ln(p / (1 - p))`) so a
/// threshold of 1 keeps nothing even when a large logit's sigmoid rounds to
/// 1.0. Only valid (unmasked) points are considered. Ranking: score
/// descending, then earlier `t`, lower label, lower level.
pub fn score_filter_topk(raw: &RawPrediction, points: &[Vec<Point>], thresh: f64, topk: usize) -> Result<Vec<Candidate>> {
    if !(0.0..=1.0).contains(&thresh) {
        return Err(Error::config(format!("score threshold {thresh} outside [0, 1]")));
    }
    if points.len() != raw.levels.len() {
        return Err(Error::config("points and predictions have different level counts"));
    }
    let logit_floor = (thresh / (1.0 - thresh)).ln();
    let mut out = Vec::new();
    for (level, (pred, pts)) in raw.levels.iter().zip(points).enumerate() {
        if pts.len() != pred.cls_logits.rows() {
            return Err(Error::config(format!("level {level}: {} points for {} steps", pts.len(), pred.cls_logits.rows())));
        }
        for (index, pt) in pts.iter().enumerate() {
            if !pred.mask[index] {
                continue;
            }
            for (class, &logit) in pred.cls_logits.row(index).iter().enumerate() {
                let logit = logit as f64;
                if logit >= logit_floor {
                    out.push(Candidate {
                        level,
                        index,
                        class,
                        score: sigmoid(logit),
                        point: *pt,
                        offset_left: pred.offsets.get(index, 0),
                        offset_right: pred.offsets.get(index, 1),
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.point.t.total_cmp(&b.point.t))
            .then(a.class.cmp(&b.class))
            .then(a.level.cmp(&b.level))
    });
    out.truncate(topk);
    Ok(out)
}

/// `left = t - offset_left * stride`, `right = t + offset_right * stride`,
/// both clamped to `[0, n_chunks]`.
pub fn decode_segments(cands: &[Candidate], n_chunks: usize) -> Vec<GridSegment> {
    let hi = n_chunks as f64;
    cands
        .iter()
        .map(|c| {
            let t = c.point.t as f64;
            let stride = c.point.stride as f64;
            GridSegment {
                left: (t - c.offset_left as f64 * stride).clamp(0.0, hi),
                right: (t + c.offset_right as f64 * stride).clamp(0.0, hi),
                label: c.class as u32 + 1,
                score: c.score,
            }
        })
        .collect()
}

/// Keeps segments with `right - left >= min_chunks`.
pub fn filter_min_duration(segs: Vec<GridSegment>, min_chunks: f64) -> Vec<GridSegment> {
    segs.into_iter().filter(|s| s.right - s.left >= min_chunks).collect()
}

/// Intersection over union of two closed intervals; 0 when the union is empty.
pub fn temporal_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Rank order shared by NMS and its output: score descending, earlier
/// left, lower label, earlier right.
pub fn segment_rank(a: &GridSegment, b: &GridSegment) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.left.total_cmp(&b.left))
        .then(a.label.cmp(&b.label))
        .then(a.right.total_cmp(&b.right))
}

/// Greedy hard NMS, run independently per label.
///
/// A segment is suppressed when its tIoU with a kept segment of the same
/// label is strictly greater than `iou_thresh`. Output follows
/// [`segment_rank`].
pub fn nms_multiclass(segs: &[GridSegment], iou_thresh: f64) -> Vec<GridSegment> {
    let mut by_label: BTreeMap<u32, Vec<GridSegment>> = BTreeMap::new();
    for s in segs {
        by_label.entry(s.label).or_default().push(*s);
    }
    let mut kept = Vec::new();
    for (_, mut group) in by_label {
        group.sort_by(segment_rank);
        let mut suppressed = vec![false; group.len()];
        for i in 0..group.len() {
            if suppressed[i] {
                continue;
            }
            kept.push(group[i]);
            let anchor = (group[i].left, group[i].right);
            for j in i + 1..group.len() {
                if !suppressed[j] && temporal_iou(anchor, (group[j].left, group[j].right)) > iou_thresh {
                    suppressed[j] = true;
                }
            }
        }
    }
    kept.sort_by(segment_rank);
    kept
}

/// `seconds = (grid * feat_stride + 0.5 * n_frames) / fps`.
pub fn grid_to_seconds(grid: f64, feat_stride: usize, n_frames: usize, fps: f64) -> f64 {
    (grid * feat_stride as f64 + 0.5 * n_frames as f64) / fps
}

pub fn to_timestamps(segs: &[GridSegment], feat_stride: usize, n_frames: usize, fps: f64) -> Result<Vec<Detection>> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::config(format!("fps must be positive, got {fps}")));
    }
    Ok(segs
        .iter()
        .map(|s| Detection {
            t_start: grid_to_seconds(s.left, feat_stride, n_frames, fps),
            t_end: grid_to_seconds(s.right, feat_stride, n_frames, fps),
            label: s.label,
            score: s.score,
        })
        .collect())
}

/// Keeps detections scoring strictly above `min_score`.
pub fn final_filter(dets: Vec<Detection>, min_score: f64) -> Vec<Detection> {
    dets.into_iter().filter(|d| d.score > min_score).collect()
}

/// Runs every stage on one forward pass.
pub fn postprocess(out: &ForwardOutput, cfg: &PostprocessConfig, fps: f64) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let cands = score_filter_topk(&out.raw, &out.points, cfg.pre_nms_thresh, cfg.pre_nms_topk)?;
    let segs = decode_segments(&cands, out.n_chunks);
    let segs = filter_min_duration(segs, cfg.min_duration);
    let segs = nms_multiclass(&segs, cfg.nms_iou);
    let dets = to_timestamps(&segs, cfg.feat_stride, cfg.frames_per_chunk, fps)?;
    Ok(final_filter(dets, cfg.min_score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LevelPrediction;
    use crate::numerics::Matrix;

    fn seg(left: f64, right: f64, label: u32, score: f64) -> GridSegment {
        GridSegment { left, right, label, score }
    }

    fn cand(t: f32, stride: f32, ol: f32, or: f32) -> Candidate {
        Candidate {
            level: 0,
            index: 0,
            class: 0,
            score: 0.9,
            point: Point {
                t,
                range_left: 0.0,
                range_right: 8.0,
                stride,
            },
            offset_left: ol,
            offset_right: or,
        }
    }

    fn raw_from_logits(logits: Vec<f32>, classes: usize) -> (RawPrediction, Vec<Vec<Point>>) {
        let t = logits.len() / classes;
        let pred = LevelPrediction {
            cls_logits: Matrix::new(t, classes, logits).unwrap(),
            offsets: Matrix::zeros(t, 2),
            mask: vec![true; t],
            stride: 1,
        };
        let pts = (0..t)
            .map(|i| Point {
                t: i as f32,
                range_left: 0.0,
                range_right: 4.0,
                stride: 1.0,
            })
            .collect();
        (RawPrediction { levels: vec![pred] }, vec![pts])
    }

    #[test]
    fn threshold_edges() {
        let (raw, pts) = raw_from_logits(vec![0.0; 12], 3);
        assert_eq!(score_filter_topk(&raw, &pts, 0.2, 5000).unwrap().len(), 12);
        let (raw, pts) = raw_from_logits(vec![40.0; 12], 3);
        assert!(score_filter_topk(&raw, &pts, 1.0, 5000).unwrap().is_empty());
        assert_eq!(score_filter_topk(&raw, &pts, 0.0, 5000).unwrap().len(), 12);
    }

    #[test]
    fn topk_keeps_best_with_ties_by_time_then_label() {
        let (raw, pts) = raw_from_logits(vec![1.0, 2.0, 2.0, 2.0, 0.5, 0.1], 2);
        let c = score_filter_topk(&raw, &pts, 0.0, 3).unwrap();
        let keys: Vec<_> = c.iter().map(|c| (c.index, c.class)).collect();
        assert_eq!(keys, vec![(0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn masked_points_never_become_candidates() {
        let (mut raw, pts) = raw_from_logits(vec![3.0; 4], 1);
        raw.levels[0].mask = vec![true, true, false, false];
        assert_eq!(score_filter_topk(&raw, &pts, 0.2, 10).unwrap().len(), 2);
    }

    #[test]
    fn decoding_examples() {
        let s = decode_segments(&[cand(100.0, 4.0, 2.0, 3.0)], 1000);
        assert_eq!((s[0].left, s[0].right), (92.0, 112.0));
        let s = decode_segments(&[cand(7.0, 2.0, 0.0, 0.0)], 1000);
        assert_eq!((s[0].left, s[0].right), (7.0, 7.0));
        let s = decode_segments(&[cand(1.0, 1.0, 5.0, 100.0)], 20);
        assert_eq!((s[0].left, s[0].right), (0.0, 20.0));
    }

    #[test]
    fn min_duration_is_inclusive() {
        let segs = vec![seg(3.0, 3.0, 1, 0.9), seg(0.0, 8.0, 1, 0.9)];
        assert_eq!(filter_min_duration(segs.clone(), 0.0).len(), 2);
        assert_eq!(filter_min_duration(segs.clone(), 1.0), vec![segs[1]]);
        assert_eq!(filter_min_duration(segs.clone(), 8.0), vec![segs[1]]);
    }

    #[test]
    fn iou_examples() {
        assert_eq!(temporal_iou((0.0, 10.0), (0.0, 10.0)), 1.0);
        assert_eq!(temporal_iou((0.0, 10.0), (10.0, 20.0)), 0.0);
        assert!((temporal_iou((0.0, 10.0), (5.0, 15.0)) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(temporal_iou((4.0, 4.0), (4.0, 4.0)), 0.0);
    }

    #[test]
    fn nms_examples() {
        let chain = [seg(0.0, 10.0, 1, 0.9), seg(1.0, 11.0, 1, 0.8), seg(0.5, 10.5, 1, 0.7)];
        assert_eq!(nms_multiclass(&chain, 0.5), vec![chain[0]]);
        let disjoint = [seg(0.0, 1.0, 1, 0.9), seg(2.0, 3.0, 1, 0.8), seg(4.0, 5.0, 1, 0.7)];
        assert_eq!(nms_multiclass(&disjoint, 0.5).len(), 3);
        let cross = [seg(0.0, 10.0, 1, 0.9), seg(0.0, 10.0, 2, 0.9)];
        assert_eq!(nms_multiclass(&cross, 0.5).len(), 2);
        // tIoU exactly at the threshold survives
        let edge = [seg(0.0, 10.0, 1, 0.9), seg(5.0, 15.0, 1, 0.8)];
        assert_eq!(nms_multiclass(&edge, 1.0 / 3.0).len(), 2);
    }

    #[test]
    fn timestamps() {
        let d = to_timestamps(&[seg(10.0, 10.0, 1, 0.9)], 16, 16, 30.0).unwrap();
        assert!((d[0].t_start - 5.6).abs() < 1e-12);
        let d = to_timestamps(&[seg(0.0, 1.0, 1, 0.9)], 16, 16, 30.0).unwrap();
        assert!((d[0].t_start - 8.0 / 30.0).abs() < 1e-12);
        assert!(d[0].t_start < d[0].t_end);
        assert!(matches!(to_timestamps(&[], 16, 16, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn final_filter_is_strict() {
        let d = |score| Detection {
            t_start: 0.0,
            t_end: 1.0,
            label: 1,
            score,
        };
        assert_eq!(final_filter(vec![d(0.5), d(0.51)], 0.5), vec![d(0.51)]);
        assert_eq!(final_filter(vec![d(0.5), d(0.51)], 0.0).len(), 2);
        assert!(final_filter(vec![d(0.5), d(0.99)], 1.0).is_empty());
    }
}
