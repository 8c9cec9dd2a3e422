use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature widths of the two supported video encoders (base / giant).
pub const SUPPORTED_INPUT_DIMS: [usize; 2] = [768, 1408];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum BackboneKind {
    /// Masked convolutions only.
    Conv,
    /// Masked convolutions with a windowed self-attention block per level.
    ConvTransformer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeckKind {
    /// Per-level layer norm, no fusion.
    Identity,
    /// 1D spatial-pyramid-pooling-fast block per level.
    Sppf,
}

impl std::str::FromStr for NeckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(NeckKind::Identity),
            "sppf" => Ok(NeckKind::Sppf),
            other => Err(Error::config(format!("unknown neck `{other}` (expected identity|sppf)"))),
        }
    }
}

/// Architecture hyperparameters of the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmaConfig {
    pub input_dim: usize,
    pub channels: usize,
    pub num_levels: usize,
    pub backbone: BackboneKind,
    pub neck: NeckKind,
    /// Local attention window (odd).
    pub window: usize,
    pub num_heads: usize,
    /// Max-pool kernel of the SPPF neck (odd).
    pub sppf_kernel: usize,
    pub num_classes: usize,
    /// Regression range per level, in chunks.
    pub reg_ranges: Vec<(f32, f32)>,
    /// Frames between consecutive chunks.
    pub feat_stride: usize,
    pub frames_per_chunk: usize,
    pub ln_eps: f32,
    /// Accept feature widths other than 768/1408.
    pub allow_any_input_dim: bool,
}

impl Default for AmaConfig {
    fn default() -> Self {
        Self {
            input_dim: 768,
            channels: 256,
            num_levels: 6,
            backbone: BackboneKind::ConvTransformer,
            neck: NeckKind::Sppf,
            window: 9,
            num_heads: 1,
            sppf_kernel: 5,
            num_classes: 16,
            reg_ranges: default_reg_ranges(),
            feat_stride: 16,
            frames_per_chunk: 16,
            ln_eps: crate::numerics::DEFAULT_LN_EPS,
            allow_any_input_dim: false,
        }
    }
}

pub fn default_reg_ranges() -> Vec<(f32, f32)> {
    vec![
        (0.0, 4.0),
        (4.0, 8.0),
        (8.0, 16.0),
        (16.0, 32.0),
        (32.0, 64.0),
        (64.0, 10000.0),
    ]
}

impl AmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_levels == 0 {
            return Err(Error::config("num_levels must be >= 1"));
        }
        if !self.allow_any_input_dim && !SUPPORTED_INPUT_DIMS.contains(&self.input_dim) {
            return Err(Error::config(format!(
                "input_dim {} is not one of {SUPPORTED_INPUT_DIMS:?}",
                self.input_dim
            )));
        }
        if self.input_dim == 0 || self.channels == 0 || self.num_classes == 0 {
            return Err(Error::config("input_dim, channels and num_classes must be positive"));
        }
        if self.reg_ranges.len() != self.num_levels {
            return Err(Error::config(format!(
                "{} regression ranges for {} levels",
                self.reg_ranges.len(),
                self.num_levels
            )));
        }
        for (i, &(lo, hi)) in self.reg_ranges.iter().enumerate() {
            if !(lo >= 0.0 && lo < hi) {
                return Err(Error::config(format!("regression range {i} [{lo}, {hi}] is empty or negative")));
            }
            if let Some(&(next_lo, _)) = self.reg_ranges.get(i + 1) {
                if next_lo < hi {
                    return Err(Error::config(format!("regression ranges {i} and {} overlap", i + 1)));
                }
            }
        }
        let top = self.reg_ranges.last().map_or(0.0, |r| r.1);
        if top < 10000.0 {
            return Err(Error::config(format!("top regression range ends at {top}, needs >= 10000")));
        }
        if self.window % 2 == 0 {
            return Err(Error::config(format!("attention window must be odd, got {}", self.window)));
        }
        if self.num_heads == 0 || self.channels % self.num_heads != 0 {
            return Err(Error::config(format!(
                "{} heads do not divide {} channels",
                self.num_heads, self.channels
            )));
        }
        if self.sppf_kernel % 2 == 0 {
            return Err(Error::config(format!("sppf kernel must be odd, got {}", self.sppf_kernel)));
        }
        if self.neck == NeckKind::Sppf && self.channels % 2 != 0 {
            return Err(Error::config(format!("sppf neck needs an even channel count, got {}", self.channels)));
        }
        if self.feat_stride == 0 || self.frames_per_chunk == 0 {
            return Err(Error::config("feat_stride and frames_per_chunk must be positive"));
        }
        if !(self.ln_eps >= 0.0) {
            return Err(Error::config("ln_eps must be >= 0"));
        }
        Ok(())
    }

    /// Shortest sequence the pyramid accepts: `2^(L-1)` chunks.
    pub fn min_sequence_len(&self) -> usize {
        1usize << (self.num_levels - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        AmaConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_inconsistent_ranges() {
        let mut cfg = AmaConfig::default();
        cfg.reg_ranges[2] = (6.0, 16.0);
        assert!(cfg.validate().is_err());
        let mut cfg = AmaConfig::default();
        cfg.reg_ranges[5].1 = 512.0;
        assert!(cfg.validate().is_err());
        let mut cfg = AmaConfig::default();
        cfg.num_levels = 2;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_odd_channels_for_sppf_only() {
        let mut cfg = AmaConfig {
            channels: 255,
            ..AmaConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.neck = NeckKind::Identity;
        cfg.validate().unwrap();
    }

    #[test]
    fn input_dim_override() {
        let mut cfg = AmaConfig {
            input_dim: 32,
            ..AmaConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.allow_any_input_dim = true;
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg: AmaConfig = serde_json::from_str(r#"{"channels": 64, "neck": "identity", "backbone": "conv"}"#).unwrap();
        assert_eq!(cfg.channels, 64);
        assert_eq!(cfg.neck, NeckKind::Identity);
        assert_eq!(cfg.backbone, BackboneKind::Conv);
        assert_eq!(cfg.window, 9);
        assert!(serde_json::from_str::<AmaConfig>(r#"{"chanels": 64}"#).is_err());
    }
}
