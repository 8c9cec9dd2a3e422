//! Naive reference implementations used to cross-check the production code.
//!
//! They work on nested `Vec`s with plain loops, share no helpers with the
//! modules they verify, and are only meant for small inputs.

use crate::io::PredictionRecord;
use crate::metrics::GroundTruthSegment;
use crate::postprocess::GridSegment;

fn iou(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    let lo = if a0 > b0 { a0 } else { b0 };
    let hi = if a1 < b1 { a1 } else { b1 };
    let inter = if hi > lo { hi - lo } else { 0.0 };
    let union = (a1 - a0) + (b1 - b0) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// True when `a` should be kept before `b`.
fn nms_before(a: &GridSegment, b: &GridSegment) -> bool {
    if a.score != b.score {
        return a.score > b.score;
    }
    if a.left != b.left {
        return a.left < b.left;
    }
    if a.label != b.label {
        return a.label < b.label;
    }
    a.right < b.right
}

/// Repeatedly keeps the best remaining segment and drops every remaining
/// same-label segment overlapping it by more than `thresh`.
pub fn oracle_nms(segs: &[GridSegment], thresh: f64) -> Vec<GridSegment> {
    let mut alive: Vec<GridSegment> = segs.to_vec();
    let mut kept = Vec::new();
    while !alive.is_empty() {
        let mut best = 0;
        for i in 1..alive.len() {
            if nms_before(&alive[i], &alive[best]) {
                best = i;
            }
        }
        let top = alive.remove(best);
        alive.retain(|s| s.label != top.label || iou(top.left, top.right, s.left, s.right) <= thresh);
        kept.push(top);
    }
    kept
}

/// Average precision from the definition: rank, match greedily, then sum
/// recall increments times the best precision at any later rank.
pub fn oracle_ap(dets: &[PredictionRecord], gts: &[GroundTruthSegment], label: u32, tiou: f64) -> Option<f64> {
    let gts: Vec<&GroundTruthSegment> = gts.iter().filter(|g| g.label == label).collect();
    if gts.is_empty() {
        return None;
    }
    let mut ranked: Vec<&PredictionRecord> = dets.iter().filter(|d| d.label == label).collect();
    // insertion sort: score desc, start asc, video asc, end asc
    for i in 1..ranked.len() {
        let mut j = i;
        while j > 0 {
            let (a, b) = (ranked[j - 1], ranked[j]);
            let swap = if a.score != b.score {
                b.score > a.score
            } else if a.t_start != b.t_start {
                b.t_start < a.t_start
            } else if a.video_id != b.video_id {
                b.video_id < a.video_id
            } else {
                b.t_end < a.t_end
            };
            if !swap {
                break;
            }
            ranked.swap(j - 1, j);
            j -= 1;
        }
    }

    let mut used = vec![false; gts.len()];
    let mut hits = Vec::with_capacity(ranked.len());
    for d in &ranked {
        let mut best: Option<usize> = None;
        let mut best_iou = 0.0;
        for (gi, g) in gts.iter().enumerate() {
            if used[gi] || g.video_id != d.video_id {
                continue;
            }
            let o = iou(d.t_start, d.t_end, g.start, g.end);
            if o >= tiou && (best.is_none() || o > best_iou) {
                best = Some(gi);
                best_iou = o;
            }
        }
        if let Some(gi) = best {
            used[gi] = true;
        }
        hits.push(best.is_some());
    }

    let n = ranked.len();
    let mut precision = vec![0.0; n];
    let mut recall = vec![0.0; n];
    let mut tp = 0usize;
    for k in 0..n {
        if hits[k] {
            tp += 1;
        }
        precision[k] = tp as f64 / (k + 1) as f64;
        recall[k] = tp as f64 / gts.len() as f64;
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for k in 0..n {
        if recall[k] > prev_recall {
            let mut best = 0.0;
            for &p in &precision[k..] {
                if p > best {
                    best = p;
                }
            }
            ap += (recall[k] - prev_recall) * best;
            prev_recall = recall[k];
        }
    }
    Some(ap)
}

/// `softmax(q k^T / sqrt(d)) v` with rows as time steps.
pub fn oracle_dense_attention(q: &[Vec<f64>], k: &[Vec<f64>], v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = q.first().map_or(0, Vec::len) as f64;
    q.iter()
        .map(|qi| {
            let scores: Vec<f64> = k
                .iter()
                .map(|kj| qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() / d.sqrt())
                .collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
            let z: f64 = exps.iter().sum();
            let width = v.first().map_or(0, Vec::len);
            (0..width)
                .map(|c| exps.iter().zip(v).map(|(e, vj)| e / z * vj[c]).sum())
                .collect()
        })
        .collect()
}

/// Zero-padded cross-correlation of `x` (`[c_in][t]`) with `w`
/// (`[c_out][c_in][k]`), `k/2` padding on both sides.
pub fn oracle_conv(x: &[Vec<f64>], w: &[Vec<Vec<f64>>], b: &[f64], stride: usize) -> Vec<Vec<f64>> {
    let t = x.first().map_or(0, Vec::len);
    let t_out = (t + stride - 1) / stride;
    let mut out = vec![vec![0.0; t_out]; w.len()];
    for (o, wo) in w.iter().enumerate() {
        for u in 0..t_out {
            let mut acc = b[o];
            for (i, wi) in wo.iter().enumerate() {
                let k = wi.len();
                for (j, wij) in wi.iter().enumerate() {
                    let src = (u * stride + j) as i64 - (k / 2) as i64;
                    if src >= 0 && (src as usize) < t {
                        acc += wij * x[i][src as usize];
                    }
                }
            }
            out[o][u] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attention_single_step_returns_v() {
        let out = oracle_dense_attention(&[vec![0.3, -1.0]], &[vec![2.0, 0.5]], &[vec![7.0, -3.0, 1.5]]);
        assert_eq!(out, vec![vec![7.0, -3.0, 1.5]]);
    }

    #[test]
    fn ap_perfect() {
        let gts = vec![GroundTruthSegment {
            video_id: "v".into(),
            label: 2,
            start: 1.0,
            end: 4.0,
        }];
        let dets = vec![PredictionRecord {
            video_id: "v".into(),
            label: 2,
            t_start: 1.0,
            t_end: 4.0,
            score: 1.0,
        }];
        assert_eq!(oracle_ap(&dets, &gts, 2, 0.5), Some(1.0));
    }

    #[test]
    fn nms_keeps_separate_labels() {
        let s = |label| GridSegment {
            left: 0.0,
            right: 4.0,
            label,
            score: 0.5,
        };
        assert_eq!(oracle_nms(&[s(1), s(2), s(1)], 0.5).len(), 2);
    }

    #[test]
    fn conv_difference_kernel() {
        let out = oracle_conv(&[vec![1.0, 2.0, 3.0]], &[vec![vec![1.0, 0.0, -1.0]]], &[0.0], 1);
        assert_eq!(out, vec![vec![-2.0, -2.0, 2.0]]);
    }
}
