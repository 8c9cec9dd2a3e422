//! Features in, timestamped predictions out.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{sort_predictions, FeatureSequence, PredictionRecord};
use crate::model::{AmaConfig, AmaModel, WeightBundle};
use crate::postprocess::{postprocess, PostprocessConfig};

/// Model and post-processing settings, as stored in a run config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: AmaConfig,
    pub postprocess: PostprocessConfig,
}

pub struct Detector {
    model: AmaModel,
    post: PostprocessConfig,
    fps_override: Option<f64>,
}

impl Detector {
    pub fn new(cfg: RunConfig, weights: &WeightBundle) -> Result<Self> {
        cfg.postprocess.validate()?;
        Ok(Self {
            model: AmaModel::new(cfg.model, weights)?,
            post: cfg.postprocess,
            fps_override: None,
        })
    }

    /// Uses `fps` instead of each sequence's own frame rate.
    pub fn with_fps(mut self, fps: Option<f64>) -> Self {
        self.fps_override = fps;
        self
    }

    pub fn model(&self) -> &AmaModel {
        &self.model
    }

    pub fn detect(&self, features: &FeatureSequence) -> Result<Vec<PredictionRecord>> {
        let out = self.model.forward(features)?;
        let fps = self.fps_override.unwrap_or(features.fps);
        let mut preds: Vec<PredictionRecord> = postprocess(&out, &self.post, fps)?
            .into_iter()
            .map(|d| PredictionRecord {
                video_id: features.video_id.clone(),
                label: d.label,
                t_start: d.t_start,
                t_end: d.t_end,
                score: d.score,
            })
            .collect();
        sort_predictions(&mut preds);
        Ok(preds)
    }

    /// Videos are processed in parallel; the result is in canonical order
    /// regardless of thread count.
    pub fn detect_all(&self, videos: &[FeatureSequence]) -> Result<Vec<PredictionRecord>> {
        let per_video = videos.par_iter().map(|v| self.detect(v)).collect::<Result<Vec<_>>>()?;
        let mut all: Vec<PredictionRecord> = per_video.into_iter().flatten().collect();
        sort_predictions(&mut all);
        Ok(all)
    }
}
