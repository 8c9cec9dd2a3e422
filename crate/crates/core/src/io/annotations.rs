use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_bytes, round6, write_bytes};
use crate::error::{Error, Result};
use crate::metrics::GroundTruthSegment;

pub const NUM_ACTION_CLASSES: u32 = 16;

/// Distracted-driving action names, indexed by `label - 1`.
pub const ACTION_NAMES: [&str; 16] = [
    "Drinking",
    "Phone Call (right hand)",
    "Phone Call (left hand)",
    "Eating",
    "Text (right hand)",
    "Text (left hand)",
    "Reaching behind",
    "Adjust control panel",
    "Pick up from floor (Driver)",
    "Pick up from floor (Passenger)",
    "Talk to passenger (right)",
    "Talk to passenger (backseat)",
    "Yawning",
    "Hand on head",
    "Singing or dancing with music",
    "Normal driving",
];

pub fn action_name(label: u32) -> Option<&'static str> {
    ACTION_NAMES.get((label as usize).checked_sub(1)?).copied()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedSegment {
    pub label: u32,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoAnnotation {
    pub video_id: String,
    pub fps: f64,
    pub duration_s: f64,
    pub segments: Vec<AnnotatedSegment>,
}

/// Ground truth for a set of videos: `{"videos": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSet {
    pub videos: Vec<VideoAnnotation>,
}

impl AnnotationSet {
    /// Checks value ranges; duplicate segments only log a warning.
    pub fn validate(&self) -> Result<()> {
        for v in &self.videos {
            if !(v.fps.is_finite() && v.fps > 0.0) || !(v.duration_s.is_finite() && v.duration_s >= 0.0) {
                return Err(Error::data(format!("video `{}`: invalid fps/duration", v.video_id)));
            }
            for (i, s) in v.segments.iter().enumerate() {
                let ctx = || format!("video `{}` segment {i}", v.video_id);
                if !(s.start_s.is_finite() && s.end_s.is_finite()) {
                    return Err(Error::data(format!("{}: non-finite time", ctx())));
                }
                if s.start_s < 0.0 || s.end_s < 0.0 {
                    return Err(Error::data(format!("{}: negative time", ctx())));
                }
                if s.start_s >= s.end_s || s.end_s > v.duration_s {
                    return Err(Error::data(format!(
                        "{}: need 0 <= start < end <= duration, got [{}, {}] of {}",
                        ctx(),
                        s.start_s,
                        s.end_s,
                        v.duration_s
                    )));
                }
                if !(1..=NUM_ACTION_CLASSES).contains(&s.label) {
                    return Err(Error::data(format!("{}: unknown label id {}", ctx(), s.label)));
                }
                if v.segments[..i].contains(s) {
                    log::warn!("{}: duplicates an earlier ground-truth segment", ctx());
                }
            }
        }
        Ok(())
    }

    /// Flattened ground truth in file order.
    pub fn ground_truth(&self) -> Vec<GroundTruthSegment> {
        self.videos
            .iter()
            .flat_map(|v| {
                v.segments.iter().map(move |s| GroundTruthSegment {
                    video_id: v.video_id.clone(),
                    label: s.label,
                    start: s.start_s,
                    end: s.end_s,
                })
            })
            .collect()
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoAnnotation> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let bytes = read_bytes(path)?;
    let set: AnnotationSet = serde_json::from_slice(&bytes)
        .map_err(|e| Error::format(path.display().to_string(), format!("invalid annotation JSON: {e}")))?;
    set.validate()?;
    Ok(set)
}

/// Pretty JSON with all times rounded to 6 decimals.
pub fn write_annotations(path: impl AsRef<Path>, set: &AnnotationSet) -> Result<()> {
    let mut rounded = set.clone();
    for v in &mut rounded.videos {
        v.duration_s = round6(v.duration_s);
        for s in &mut v.segments {
            s.start_s = round6(s.start_s);
            s.end_s = round6(s.end_s);
        }
    }
    let mut text = serde_json::to_string_pretty(&rounded).expect("annotations serialize");
    text.push('\n');
    write_bytes(path.as_ref(), text.as_bytes())
}
