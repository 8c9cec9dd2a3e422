//! Point-based temporal action localization over pre-extracted chunk
//! features: a convolutional / windowed-attention pyramid with an Identity or
//! SPPF-1D neck, post-processing to timestamped detections, multi-model
//! ensembling, and the mAP and AI City evaluators.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod oracles;
pub mod pipeline;
pub mod postprocess;
pub mod synth;

pub use error::{Error, Result};
