use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ama_tal::io::{read_predictions, write_predictions, PredictionRecord};

fn ama(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ama")).args(args).output().expect("run ama")
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

struct Dataset {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Dataset {
    fn new(extra: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let mut args = vec!["synth", "--out-dir", dir.path().to_str().unwrap(), "--videos", "4", "--empty-videos", "1"];
        args.extend_from_slice(extra);
        let out = ama(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        Dataset { _dir: dir, root }
    }

    fn path(&self, name: &str) -> String {
        s(&self.root.join(name))
    }

    fn detect(&self, out: &str, extra: &[&str]) -> Output {
        let (features, weights, config, out) = (self.path("features"), self.path("weights.amaw"), self.path("config.json"), self.path(out));
        let mut args = vec!["detect", "--features", &features, "--weights", &weights, "--config", &config, "--out", &out];
        args.extend_from_slice(extra);
        ama(&args)
    }
}

#[test]
fn synth_writes_the_expected_layout() {
    let d = Dataset::new(&[]);
    for name in ["annotations.json", "weights.amaw", "config.json", "features/synth_000.amaf", "features/synth_004.amaf"] {
        assert!(d.root.join(name).is_file(), "{name}");
    }
}

#[test]
fn detect_then_eval_recovers_the_plants() {
    let d = Dataset::new(&[]);
    assert!(d.detect("p.jsonl", &[]).status.success());
    let preds = read_predictions(d.path("p.jsonl")).unwrap();
    assert_eq!(preds.len(), 16);

    let out = ama(&["eval", "--pred", &d.path("p.jsonl"), "--gt", &d.path("annotations.json"), "--out", &d.path("r.json")]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path("r.json")).unwrap()).unwrap();
    assert_eq!(report["avg_map"], 1.0);
    assert_eq!(report["f1"], 1.0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("average mAP: 1.0000"));

    let out = ama(&["eval", "--pred", &d.path("p.jsonl"), "--gt", &d.path("annotations.json"), "--protocol", "aicity", "--out", &d.path("a.json")]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path("a.json")).unwrap()).unwrap();
    assert!(report["aicity_score"].as_f64().unwrap() > 0.9);
}

#[test]
fn both_necks_share_one_schema() {
    let d = Dataset::new(&[]);
    assert!(d.detect("sppf.jsonl", &["--neck", "sppf"]).status.success());
    assert!(d.detect("identity.jsonl", &["--neck", "identity"]).status.success());
    let keys = |path: String| -> Vec<Vec<String>> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object().unwrap().keys().cloned().collect()
            })
            .collect()
    };
    let a = keys(d.path("sppf.jsonl"));
    let b = keys(d.path("identity.jsonl"));
    assert!(!a.is_empty());
    assert_eq!(a[0], b[0]);
}

#[test]
fn csv_output_and_thresholds() {
    let d = Dataset::new(&[]);
    assert!(d.detect("p.csv", &[]).status.success());
    let text = std::fs::read_to_string(d.path("p.csv")).unwrap();
    assert!(text.starts_with("video_id,label,t_start,t_end,score\n"));
    assert!(d.detect("none.jsonl", &["--min-score", "0.95"]).status.success());
    assert!(read_predictions(d.path("none.jsonl")).unwrap().is_empty());
    let bad = d.detect("x.jsonl", &["--nms-iou", "1.5"]);
    assert_eq!(bad.status.code(), Some(3));
    let bad = d.detect("x.jsonl", &["--fps", "0"]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn verbose_writes_a_sidecar_only_on_request() {
    let d = Dataset::new(&[]);
    assert!(d.detect("quiet.jsonl", &[]).status.success());
    assert!(!d.root.join("quiet.jsonl.run.json").exists());
    assert!(d.detect("loud.jsonl", &["--verbose"]).status.success());
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path("loud.jsonl.run.json")).unwrap()).unwrap();
    assert_eq!(meta["manifest"]["subcommand"], "detect");
    assert_eq!(std::fs::read(d.path("quiet.jsonl")).unwrap(), std::fs::read(d.path("loud.jsonl")).unwrap());
}

#[test]
fn ensemble_fuses_files() {
    let dir = tempfile::tempdir().unwrap();
    let rec = |s: f64, e: f64, score: f64| PredictionRecord {
        video_id: "v".into(),
        label: 2,
        t_start: s,
        t_end: e,
        score,
    };
    write_predictions(dir.path().join("a.jsonl"), &[rec(2.0, 10.0, 1.0), rec(30.0, 40.0, 0.1)]).unwrap();
    write_predictions(dir.path().join("b.jsonl"), &[rec(4.0, 14.0, 0.75)]).unwrap();
    let out = dir.path().join("f.jsonl");
    let status = ama(&["ensemble", "--inputs", &s(&dir.path().join("a.jsonl")), &s(&dir.path().join("b.jsonl")), "--mode", "mean", "--out", &s(&out)]);
    assert!(status.status.success());
    let fused = read_predictions(&out).unwrap();
    assert_eq!(fused, vec![rec(3.0, 12.0, 1.0)]);
}

#[test]
fn inspect_reports_each_format() {
    let d = Dataset::new(&[]);
    let json = |path: String| -> serde_json::Value {
        let out = ama(&["inspect", &path]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    };
    let f = json(d.path("features/synth_001.amaf"));
    assert_eq!(f["format"], "AMAF");
    assert_eq!(f["header"]["n_chunks"], 256);
    let w = json(d.path("weights.amaw"));
    assert_eq!(w["format"], "AMAW");
    assert!(w["manifest"].as_array().unwrap().iter().any(|e| e["name"] == "cls_head.1.w"));
    assert_eq!(json(d.path("annotations.json"))["format"], "annotations");
    assert!(d.detect("p.jsonl", &[]).status.success());
    assert_eq!(json(d.path("p.jsonl"))["format"], "predictions");
}

#[test]
fn error_exit_codes() {
    let d = Dataset::new(&[]);
    let missing = ama(&["eval", "--pred", &d.path("nope.jsonl"), "--gt", &d.path("annotations.json")]);
    assert_eq!(missing.status.code(), Some(2));
    std::fs::write(d.path("bad.jsonl"), "{\"video_id\":\"synth_000\"}\n").unwrap();
    let malformed = ama(&["eval", "--pred", &d.path("bad.jsonl"), "--gt", &d.path("annotations.json")]);
    assert_eq!(malformed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&malformed.stderr).contains("line 1"));
    std::fs::write(d.path("cfg.json"), "{\"model\": {\"num_levels\": 0}}").unwrap();
    let bad_cfg = d.detect("x.jsonl", &["--config", &d.path("cfg.json")]);
    assert_eq!(bad_cfg.status.code(), Some(3));
    assert_eq!(ama(&["bogus"]).status.code(), Some(3));
}
