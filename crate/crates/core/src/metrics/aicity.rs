use serde::{Deserialize, Serialize};

use super::GroundTruthSegment;
use crate::io::{sort_predictions, PredictionRecord};
use crate::postprocess::temporal_iou;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AiCityOptions {
    /// Half-width of the start/end tolerance windows, seconds (inclusive).
    pub window_s: f64,
    /// Whether unmatched predictions add a zero to the average.
    pub count_unmatched_predictions: bool,
}

impl Default for AiCityOptions {
    fn default() -> Self {
        Self {
            window_s: 10.0,
            count_unmatched_predictions: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiCitySummary {
    pub score: f64,
    pub matched: usize,
    pub unmatched_gt: usize,
    pub unmatched_pred: usize,
}

/// Average activity overlap score.
///
/// A prediction is eligible for a ground-truth activity when it has the same
/// video and label, its start lies within `window_s` of the GT start and its
/// end within `window_s` of the GT end. Pairs are matched one-to-one, greedily
/// by descending overlap. Every matched pair contributes its tIoU, every
/// unmatched GT (and, by default, unmatched prediction) contributes 0, and the
/// result is the mean over all of these items.
pub fn aicity_overlap_score(dets: &[PredictionRecord], gts: &[GroundTruthSegment], opts: &AiCityOptions) -> AiCitySummary {
    let mut dets = dets.to_vec();
    sort_predictions(&mut dets);
    let mut gts = gts.to_vec();
    gts.sort_by(|a, b| {
        a.video_id
            .cmp(&b.video_id)
            .then(a.start.total_cmp(&b.start))
            .then(a.label.cmp(&b.label))
            .then(a.end.total_cmp(&b.end))
    });

    let w = opts.window_s;
    let mut pairs = Vec::new();
    for (gi, g) in gts.iter().enumerate() {
        for (pi, p) in dets.iter().enumerate() {
            let eligible = p.video_id == g.video_id
                && p.label == g.label
                && (g.start - w..=g.start + w).contains(&p.t_start)
                && (g.end - w..=g.end + w).contains(&p.t_end);
            if eligible {
                pairs.push((temporal_iou((g.start, g.end), (p.t_start, p.t_end)), gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut gt_used = vec![false; gts.len()];
    let mut pred_used = vec![false; dets.len()];
    let mut total = 0.0;
    let mut matched = 0;
    for (os, gi, pi) in pairs {
        if gt_used[gi] || pred_used[pi] {
            continue;
        }
        gt_used[gi] = true;
        pred_used[pi] = true;
        total += os;
        matched += 1;
    }
    let unmatched_gt = gts.len() - matched;
    let unmatched_pred = dets.len() - matched;
    let items = matched + unmatched_gt + if opts.count_unmatched_predictions { unmatched_pred } else { 0 };
    AiCitySummary {
        score: if items == 0 { 0.0 } else { total / items as f64 },
        matched,
        unmatched_gt,
        unmatched_pred,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(s: f64, e: f64) -> PredictionRecord {
        PredictionRecord {
            video_id: "v".into(),
            label: 4,
            t_start: s,
            t_end: e,
            score: 0.9,
        }
    }

    fn gt(s: f64, e: f64) -> GroundTruthSegment {
        GroundTruthSegment {
            video_id: "v".into(),
            label: 4,
            start: s,
            end: e,
        }
    }

    #[test]
    fn single_pair() {
        let r = aicity_overlap_score(&[det(2.0, 12.0)], &[gt(0.0, 10.0)], &AiCityOptions::default());
        assert!((r.score - 8.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.matched, 1);
    }

    #[test]
    fn outside_window_scores_zero() {
        let r = aicity_overlap_score(&[det(25.0, 35.0)], &[gt(0.0, 10.0)], &AiCityOptions::default());
        assert_eq!(r.score, 0.0);
        assert_eq!((r.unmatched_gt, r.unmatched_pred), (1, 1));
    }

    #[test]
    fn windows_are_inclusive() {
        let r = aicity_overlap_score(&[det(10.0, 20.0)], &[gt(0.0, 10.0)], &AiCityOptions::default());
        assert_eq!(r.matched, 1);
        assert_eq!(r.score, 0.0);
    }

    #[test]
    fn greedy_by_overlap_is_one_to_one() {
        let gts = [gt(0.0, 10.0)];
        let r = aicity_overlap_score(&[det(1.0, 10.0), det(0.0, 10.0)], &gts, &AiCityOptions::default());
        // best pair 1.0, leftover prediction adds a zero
        assert_eq!(r.matched, 1);
        assert_eq!(r.score, 0.5);
        let strict = AiCityOptions {
            count_unmatched_predictions: false,
            ..AiCityOptions::default()
        };
        assert_eq!(aicity_overlap_score(&[det(1.0, 10.0), det(0.0, 10.0)], &gts, &strict).score, 1.0);
    }
}
