use super::{AmaConfig, PyramidLevel};
use crate::error::{Error, Result};

/// Anchor location on one pyramid level, in base-grid chunk units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    /// `i * stride` for the `i`-th step of the level (left-aligned).
    pub t: f32,
    pub range_left: f32,
    pub range_right: f32,
    pub stride: f32,
}

impl Point {
    /// `[t, range_left, range_right, stride]`.
    pub fn to_row(self) -> [f32; 4] {
        [self.t, self.range_left, self.range_right, self.stride]
    }
}

/// Dense anchor points for every level.
pub fn generate_points(levels: &[PyramidLevel], cfg: &AmaConfig) -> Result<Vec<Vec<Point>>> {
    if cfg.reg_ranges.len() != levels.len() {
        return Err(Error::config(format!(
            "{} regression ranges for {} levels",
            cfg.reg_ranges.len(),
            levels.len()
        )));
    }
    Ok(levels
        .iter()
        .zip(&cfg.reg_ranges)
        .map(|(level, &(lo, hi))| {
            let stride = level.stride as f32;
            (0..level.features.len())
                .map(|i| Point {
                    t: i as f32 * stride,
                    range_left: lo,
                    range_right: hi,
                    stride,
                })
                .collect()
        })
        .collect())
}
