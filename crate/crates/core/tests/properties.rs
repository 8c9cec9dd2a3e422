use std::collections::BTreeSet;

use ama_tal::ensemble::{ensemble, FusionMode, SourcedPrediction};
use ama_tal::io::PredictionRecord;
use ama_tal::losses::{diou_loss_1d, sigmoid_focal_loss, LossParams};
use ama_tal::metrics::{aicity_overlap_score, average_precision, mean_ap, precision_recall_f1, AiCityOptions, GroundTruthSegment};
use ama_tal::model::{AmaConfig, AmaModel, BackboneKind, NeckKind, Point};
use ama_tal::numerics::{
    masked_conv1d, masked_max_pool1d_same, max_pool1d_same, windowed_attention_weights, Conv1dWeights, MaskedSequence, Matrix,
};
use ama_tal::oracles::oracle_conv;
use ama_tal::postprocess::{decode_segments, nms_multiclass, temporal_iou, Candidate, GridSegment};
use ama_tal::synth::random_weights;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, values: Vec<f32>) -> Matrix {
    Matrix::new(rows, cols, values).unwrap()
}

fn conv_case() -> impl Strategy<Value = (usize, usize, usize, usize, Vec<i8>, Vec<i8>, Vec<i8>)> {
    (1usize..5, 1usize..5, prop_oneof![Just(1usize), Just(3), Just(5)], 1usize..20).prop_flat_map(|(c_in, c_out, k, t)| {
        (
            Just(c_in),
            Just(c_out),
            Just(k),
            Just(t),
            prop::collection::vec(-4i8..5, c_in * t),
            prop::collection::vec(-3i8..4, c_out * c_in * k),
            prop::collection::vec(-3i8..4, c_out),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conv_matches_naive_loops((c_in, c_out, k, t, x, w, b) in conv_case(), stride in 1usize..3) {
        let xm = matrix(c_in, t, x.iter().map(|&v| v as f32).collect());
        let conv = Conv1dWeights::new(c_out, c_in, k, w.iter().map(|&v| v as f32).collect(), b.iter().map(|&v| v as f32).collect()).unwrap();
        let got = masked_conv1d(&MaskedSequence::full(xm), &conv, stride).unwrap();

        let xs: Vec<Vec<f64>> = (0..c_in).map(|i| (0..t).map(|s| x[i * t + s] as f64).collect()).collect();
        let ws: Vec<Vec<Vec<f64>>> = (0..c_out)
            .map(|o| (0..c_in).map(|i| (0..k).map(|j| w[(o * c_in + i) * k + j] as f64).collect()).collect())
            .collect();
        let bs: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let want = oracle_conv(&xs, &ws, &bs, stride);
        prop_assert_eq!(got.len(), want[0].len());
        for o in 0..c_out {
            for u in 0..got.len() {
                // small integers: every summation order is exact
                prop_assert_eq!(got.features().get(o, u) as f64, want[o][u]);
            }
        }
    }

    #[test]
    fn max_pool_dominates_input(values in prop::collection::vec(-10.0f32..10.0, 1..40), k in prop_oneof![Just(1usize), Just(3), Just(5), Just(7)]) {
        let x = matrix(1, values.len(), values.clone());
        let y = max_pool1d_same(&x, k).unwrap();
        for (a, b) in values.iter().zip(y.row(0)) {
            prop_assert!(b >= a);
        }
        let c = matrix(1, values.len(), vec![values[0]; values.len()]);
        let once = max_pool1d_same(&c, k).unwrap();
        prop_assert_eq!(max_pool1d_same(&once, k).unwrap(), once.clone());
        prop_assert_eq!(once, c);
    }

    #[test]
    fn masked_pool_ignores_padding(values in prop::collection::vec(-10.0f32..10.0, 1..30), pad in 1usize..8, junk in -50.0f32..50.0) {
        let t = values.len();
        let plain = masked_max_pool1d_same(&MaskedSequence::full(matrix(1, t, values.clone())), 5).unwrap();
        let mut padded = values.clone();
        padded.extend(std::iter::repeat(junk).take(pad));
        let mask: Vec<bool> = (0..t + pad).map(|i| i < t).collect();
        let got = masked_max_pool1d_same(&MaskedSequence::new(matrix(1, t + pad, padded), mask).unwrap(), 5).unwrap();
        prop_assert_eq!(&got.features().row(0)[..t], plain.features().row(0));
    }

    #[test]
    fn attention_rows_are_stochastic(t in 1usize..24, d in 1usize..6, window in prop_oneof![Just(1usize), Just(3), Just(9)], valid in 1usize..24, m in 0usize..4, seed in any::<u64>()) {
        let valid = valid.min(t);
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 40) as f32 / (1u64 << 24) as f32) * 4.0 - 2.0
        };
        let x = MaskedSequence::with_valid_len(Matrix::from_fn(d, t, |_, _| next()), valid);
        let memory = Matrix::from_fn(m, d, |_, _| next());
        let w = windowed_attention_weights(&x, window, if m > 0 { Some(&memory) } else { None }).unwrap();
        for s in 0..valid {
            prop_assert!((w.row_sum(s) - 1.0).abs() <= 1e-6);
        }
    }
}

fn small_model(backbone: BackboneKind, neck: NeckKind, seed: u64) -> AmaModel {
    let cfg = AmaConfig {
        input_dim: 6,
        channels: 8,
        num_levels: 4,
        reg_ranges: vec![(0.0, 4.0), (4.0, 8.0), (8.0, 16.0), (16.0, 10000.0)],
        num_classes: 3,
        backbone,
        neck,
        allow_any_input_dim: true,
        ..AmaConfig::default()
    };
    let w = random_weights(&cfg, seed, 1.5).unwrap();
    AmaModel::new(cfg, &w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pyramid_halves_and_offsets_are_non_negative(t in 8usize..70, seed in 0u64..1000, sppf in any::<bool>(), attn in any::<bool>()) {
        let neck = if sppf { NeckKind::Sppf } else { NeckKind::Identity };
        let backbone = if attn { BackboneKind::ConvTransformer } else { BackboneKind::Conv };
        let model = small_model(backbone, neck, seed);
        let x = MaskedSequence::full(Matrix::from_fn(6, t, |r, c| ((r * 31 + c * 17 + seed as usize) % 13) as f32 / 6.0 - 1.0));
        let out = model.forward_sequence(&x, None).unwrap();
        let mut expect = t;
        for (l, level) in out.levels.iter().enumerate() {
            prop_assert_eq!(level.features.len(), expect);
            prop_assert_eq!(out.points[l].len(), expect);
            expect = (expect + 1) / 2;
        }
        for level in &out.raw.levels {
            prop_assert!(level.offsets.data().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn padding_never_changes_valid_outputs(t in 8usize..40, pad in 1usize..20, seed in 0u64..1000, sppf in any::<bool>()) {
        let neck = if sppf { NeckKind::Sppf } else { NeckKind::Identity };
        let model = small_model(BackboneKind::ConvTransformer, neck, seed);
        let value = |r: usize, c: usize| ((r * 7 + c * 13 + seed as usize) % 11) as f32 / 5.0 - 1.0;
        let plain = model.forward_sequence(&MaskedSequence::full(Matrix::from_fn(6, t, value)), None).unwrap();
        let padded_x = Matrix::from_fn(6, t + pad, |r, c| if c < t { value(r, c) } else { 99.0 });
        let padded = model.forward_sequence(&MaskedSequence::with_valid_len(padded_x, t), None).unwrap();
        prop_assert_eq!(plain.n_chunks, padded.n_chunks);
        for (a, b) in plain.raw.levels.iter().zip(&padded.raw.levels) {
            let n = a.cls_logits.rows();
            prop_assert_eq!(&b.mask[..n], &a.mask[..]);
            prop_assert!(b.mask[n..].iter().all(|&m| !m));
            for u in 0..n {
                prop_assert_eq!(a.cls_logits.row(u), b.cls_logits.row(u));
                prop_assert_eq!(a.offsets.row(u), b.offsets.row(u));
            }
        }
    }
}

fn segment() -> impl Strategy<Value = GridSegment> {
    (0u32..60, 0u32..20, 1u32..4, 1u32..11).prop_map(|(l, len, label, s)| GridSegment {
        left: l as f64 * 0.5,
        right: (l + len) as f64 * 0.5,
        label,
        score: s as f64 / 10.0,
    })
}

proptest! {
    #[test]
    fn nms_output_is_an_antichain(segs in prop::collection::vec(segment(), 0..50), thresh in 0.1f64..0.9) {
        let kept = nms_multiclass(&segs, thresh);
        for (i, a) in kept.iter().enumerate() {
            for b in &kept[i + 1..] {
                if a.label == b.label {
                    prop_assert!(temporal_iou((a.left, a.right), (b.left, b.right)) <= thresh);
                }
            }
        }
    }

    #[test]
    fn nms_ignores_input_order(segs in prop::collection::vec(segment(), 0..50), rotate in 0usize..50) {
        let mut shuffled = segs.clone();
        shuffled.reverse();
        if !shuffled.is_empty() {
            let r = rotate % shuffled.len();
            shuffled.rotate_left(r);
        }
        prop_assert_eq!(nms_multiclass(&segs, 0.5), nms_multiclass(&shuffled, 0.5));
    }

    #[test]
    fn decoding_keeps_left_before_right(t in 0u32..300, stride in prop_oneof![Just(1.0f32), Just(2.0), Just(4.0), Just(32.0)], ol in 0.0f32..50.0, or in 0.0f32..50.0, n in 1usize..300) {
        let c = Candidate {
            level: 0,
            index: 0,
            class: 0,
            score: 0.5,
            point: Point { t: t as f32, range_left: 0.0, range_right: 4.0, stride },
            offset_left: ol,
            offset_right: or,
        };
        let s = decode_segments(&[c], n)[0];
        prop_assert!(s.left <= s.right);
        prop_assert!(s.left >= 0.0 && s.right <= n as f64);
    }
}

fn record() -> impl Strategy<Value = PredictionRecord> {
    (0usize..3, 1u32..4, 0u32..80, 1u32..20, 0.0f64..1.0).prop_map(|(v, label, s, len, score)| PredictionRecord {
        video_id: format!("v{v}"),
        label,
        t_start: s as f64,
        t_end: (s + len) as f64,
        score,
    })
}

fn ground_truth() -> impl Strategy<Value = GroundTruthSegment> {
    (0usize..3, 1u32..4, 0u32..80, 1u32..20).prop_map(|(v, label, s, len)| GroundTruthSegment {
        video_id: format!("v{v}"),
        label,
        start: s as f64,
        end: (s + len) as f64,
    })
}

proptest! {
    #[test]
    fn ap_is_bounded_and_monotone(dets in prop::collection::vec(record(), 0..30), gts in prop::collection::vec(ground_truth(), 1..15)) {
        let labels: BTreeSet<u32> = gts.iter().map(|g| g.label).collect();
        for &label in &labels {
            let mut prev = f64::INFINITY;
            for t in [0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9] {
                let ap = average_precision(&dets, &gts, label, t).unwrap();
                prop_assert!((0.0..=1.0).contains(&ap));
                prop_assert!(ap <= prev + 1e-12, "label {} tIoU {}: {} > {}", label, t, ap, prev);
                prev = ap;
            }
        }
    }

    #[test]
    fn metrics_ignore_detection_order(dets in prop::collection::vec(record(), 0..30), gts in prop::collection::vec(ground_truth(), 1..15)) {
        // distinct scores
        let dets: Vec<_> = dets.into_iter().enumerate().map(|(i, mut d)| { d.score = (i as f64 + 1.0) / 64.0; d }).collect();
        let mut reversed = dets.clone();
        reversed.reverse();
        let tious = [0.1, 0.3, 0.5];
        prop_assert_eq!(mean_ap(&dets, &gts, &tious).unwrap(), mean_ap(&reversed, &gts, &tious).unwrap());
        prop_assert_eq!(precision_recall_f1(&dets, &gts, 0.5, 0.3), precision_recall_f1(&reversed, &gts, 0.5, 0.3));
        let opts = AiCityOptions::default();
        prop_assert_eq!(aicity_overlap_score(&dets, &gts, &opts), aicity_overlap_score(&reversed, &gts, &opts));
    }

    #[test]
    fn matching_is_one_to_one(dets in prop::collection::vec(record(), 0..30), gts in prop::collection::vec(ground_truth(), 1..15)) {
        let prf = precision_recall_f1(&dets, &gts, 0.3, 0.0);
        prop_assert!(prf.tp <= dets.len() && prf.tp <= gts.len());
        prop_assert_eq!(prf.tp + prf.fp, dets.len());
        prop_assert_eq!(prf.tp + prf.fn_, gts.len());
        let a = aicity_overlap_score(&dets, &gts, &AiCityOptions::default());
        prop_assert_eq!(a.matched + a.unmatched_pred, dets.len());
        prop_assert_eq!(a.matched + a.unmatched_gt, gts.len());
        prop_assert!((0.0..=1.0).contains(&a.score));
    }

    #[test]
    fn aicity_of_ground_truth_is_one(gts in prop::collection::vec(ground_truth(), 1..15)) {
        let dets: Vec<_> = gts.iter().map(|g| PredictionRecord {
            video_id: g.video_id.clone(),
            label: g.label,
            t_start: g.start,
            t_end: g.end,
            score: 0.9,
        }).collect();
        prop_assert_eq!(aicity_overlap_score(&dets, &gts, &AiCityOptions::default()).score, 1.0);
    }

    #[test]
    fn ensemble_output_is_unique_and_inside_the_hull(preds in prop::collection::vec((0usize..3, record()), 0..40), weighted in any::<bool>()) {
        let sourced: Vec<_> = preds.into_iter().map(|(source, pred)| SourcedPrediction { source, pred }).collect();
        let mode = if weighted { FusionMode::Weighted } else { FusionMode::Mean };
        let fused = ensemble(&sourced, mode);
        let keys: BTreeSet<_> = fused.iter().map(|p| (p.video_id.clone(), p.label)).collect();
        prop_assert_eq!(keys.len(), fused.len());
        for f in &fused {
            let members: Vec<_> = sourced.iter().filter(|s| s.pred.video_id == f.video_id && s.pred.label == f.label).collect();
            let lo = members.iter().map(|m| m.pred.t_start).fold(f64::INFINITY, f64::min);
            let hi = members.iter().map(|m| m.pred.t_end).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(f.t_start >= lo - 1e-9 && f.t_end <= hi + 1e-9);
        }
    }

    #[test]
    fn focal_loss_is_non_negative_and_decreasing(a in -30.0f64..30.0, b in -30.0f64..30.0) {
        let p = LossParams::default();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(sigmoid_focal_loss(lo, true, &p) >= 0.0);
        prop_assert!(sigmoid_focal_loss(lo, false, &p) >= 0.0);
        prop_assert!(sigmoid_focal_loss(hi, true, &p) <= sigmoid_focal_loss(lo, true, &p));
    }

    #[test]
    fn diou_is_shift_and_scale_invariant(s1 in -50.0f64..50.0, l1 in 0.1f64..30.0, s2 in -50.0f64..50.0, l2 in 0.1f64..30.0, shift in -100.0f64..100.0, scale in 0.1f64..10.0) {
        let base = diou_loss_1d((s1, s1 + l1), (s2, s2 + l2));
        prop_assert!((0.0..2.0).contains(&base));
        let moved = diou_loss_1d(
            (s1 * scale + shift, (s1 + l1) * scale + shift),
            (s2 * scale + shift, (s2 + l2) * scale + shift),
        );
        prop_assert!((base - moved).abs() <= 1e-9);
    }
}
