//! Detection evaluation: mAP over tIoU thresholds with precision / recall /
//! F1, and the AI City average activity overlap score.

mod aicity;
mod ap;
mod report;

pub use aicity::{aicity_overlap_score, AiCityOptions, AiCitySummary};
pub use ap::{average_precision, mean_ap, precision_recall_f1, MapSummary, PrfSummary, DEFAULT_TIOUS};
pub use report::{evaluate, EvalOptions, EvalReport, Protocol};

use serde::{Deserialize, Serialize};

/// Ground-truth activity in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSegment {
    pub video_id: String,
    pub label: u32,
    pub start: f64,
    pub end: f64,
}
