//! The detector: stem, multi-level backbone, Identity/SPPF neck, point
//! generator and the two prediction heads.
//!
//! All levels share one pair of heads. Weights are looked up by name once,
//! in [`AmaModel::new`]; the model is immutable afterwards and `Sync`.

mod config;
mod neck;
mod points;
mod weights;

pub use config::{default_reg_ranges, AmaConfig, BackboneKind, NeckKind, SUPPORTED_INPUT_DIMS};
pub use neck::sppf_pool_cascade;
pub use points::{generate_points, Point};
pub use weights::{all_tensors, required_tensors, Tensor, WeightBundle};

use neck::{IdentityNeck, SppfBlock, SppfNeck};

use crate::error::{Error, Result};
use crate::io::FeatureSequence;
use crate::numerics::{
    masked_conv1d, masked_layer_norm, relu_in_place, windowed_attention_qkv, AttentionOptions, Conv1dWeights,
    MaskedSequence, Matrix, MemoryKv, RelativePositionBias,
};

/// Features of one pyramid level together with its stride (`2^level`).
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevel {
    pub features: MaskedSequence,
    pub stride: usize,
}

/// Head outputs for one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPrediction {
    /// `T_i x num_classes`, pre-sigmoid.
    pub cls_logits: Matrix,
    /// `T_i x 2` (left, right), in units of `stride`, never negative.
    pub offsets: Matrix,
    pub mask: Vec<bool>,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawPrediction {
    pub levels: Vec<LevelPrediction>,
}

/// Everything a forward pass produces.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    /// Neck outputs.
    pub levels: Vec<PyramidLevel>,
    pub points: Vec<Vec<Point>>,
    pub raw: RawPrediction,
    /// Valid chunks of the input.
    pub n_chunks: usize,
}

/// Cached hidden states of a preceding segment, one `M x C` (time-major)
/// matrix per pyramid level. Consumed by the attention blocks, which prepend
/// their key/value projections to every window.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMemory {
    pub levels: Vec<Matrix>,
}

impl SegmentMemory {
    /// Memory built from the backbone levels of a processed segment.
    pub fn from_levels(levels: &[PyramidLevel]) -> Self {
        Self {
            levels: levels
                .iter()
                .map(|l| {
                    let valid: Vec<usize> = (0..l.features.len()).filter(|&t| l.features.mask()[t]).collect();
                    let f = l.features.features();
                    Matrix::from_fn(valid.len(), f.rows(), |r, c| f.get(c, valid[r]))
                })
                .collect(),
        }
    }
}

struct AttentionBlock {
    q: Conv1dWeights,
    k: Conv1dWeights,
    v: Conv1dWeights,
    out: Conv1dWeights,
}

struct DownBlock {
    conv: Conv1dWeights,
    gamma: Vec<f32>,
    beta: Vec<f32>,
}

struct Head {
    hidden: Conv1dWeights,
    out: Conv1dWeights,
}

enum Neck {
    Identity(IdentityNeck),
    Sppf(SppfNeck),
}

pub struct AmaModel {
    cfg: AmaConfig,
    stem: Conv1dWeights,
    stem_norm: (Vec<f32>, Vec<f32>),
    down: Vec<DownBlock>,
    attention: Vec<AttentionBlock>,
    neck: Neck,
    cls_head: Head,
    reg_head: Head,
    position_bias: Option<Box<dyn RelativePositionBias>>,
}

impl std::fmt::Debug for AmaModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AmaModel").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl AmaModel {
    /// Validates `cfg`, checks `weights` against it and materializes the layers.
    pub fn new(cfg: AmaConfig, weights: &WeightBundle) -> Result<Self> {
        cfg.validate()?;
        weights.validate(&cfg)?;
        let c = cfg.channels;
        let stem = weights.conv("stem.conv", c, cfg.input_dim, 1)?;
        let stem_norm = weights.norm("stem.ln", c)?;
        let down = (1..cfg.num_levels)
            .map(|l| {
                let (gamma, beta) = weights.norm(&format!("backbone.down.{l}.ln"), c)?;
                Ok(DownBlock {
                    conv: weights.conv(&format!("backbone.down.{l}.conv"), c, c, 3)?,
                    gamma,
                    beta,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let attention = match cfg.backbone {
            BackboneKind::Conv => Vec::new(),
            BackboneKind::ConvTransformer => (0..cfg.num_levels)
                .map(|l| {
                    let p = |proj: &str| weights.conv(&format!("backbone.attn.{l}.{proj}"), c, c, 1);
                    Ok(AttentionBlock {
                        q: p("q")?,
                        k: p("k")?,
                        v: p("v")?,
                        out: p("out")?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let neck = match cfg.neck {
            NeckKind::Identity => Neck::Identity(IdentityNeck {
                norms: (0..cfg.num_levels)
                    .map(|l| weights.norm(&format!("neck.identity.{l}.ln"), c))
                    .collect::<Result<_>>()?,
                eps: cfg.ln_eps,
            }),
            NeckKind::Sppf => Neck::Sppf(SppfNeck {
                blocks: (0..cfg.num_levels)
                    .map(|l| {
                        let (gamma, beta) = weights.norm(&format!("neck.sppf.{l}.ln"), c)?;
                        Ok(SppfBlock {
                            reduce: weights.conv(&format!("neck.sppf.{l}.conv1"), c / 2, c, 1)?,
                            expand: weights.conv(&format!("neck.sppf.{l}.conv2"), c, 2 * c, 1)?,
                            gamma,
                            beta,
                        })
                    })
                    .collect::<Result<_>>()?,
                kernel: cfg.sppf_kernel,
                eps: cfg.ln_eps,
            }),
        };
        let cls_head = Head {
            hidden: weights.conv("cls_head.0", c, c, 1)?,
            out: weights.conv("cls_head.1", cfg.num_classes, c, 1)?,
        };
        let reg_head = Head {
            hidden: weights.conv("reg_head.0", c, c, 1)?,
            out: weights.conv("reg_head.1", 2, c, 1)?,
        };
        Ok(Self {
            cfg,
            stem,
            stem_norm,
            down,
            attention,
            neck,
            cls_head,
            reg_head,
            position_bias: None,
        })
    }

    /// Installs a relative position bias for the attention blocks.
    pub fn with_position_bias(mut self, bias: Box<dyn RelativePositionBias>) -> Self {
        self.position_bias = Some(bias);
        self
    }

    pub fn config(&self) -> &AmaConfig {
        &self.cfg
    }

    /// Transposes `[N, D]` features to `[D, N]` and projects them to `C` channels.
    pub fn embed_stem(&self, features: &FeatureSequence) -> Result<MaskedSequence> {
        if features.n_chunks() == 0 {
            return Err(Error::data("empty sequence"));
        }
        if features.dim() != self.cfg.input_dim {
            return Err(Error::config(format!(
                "features have dim {}, model expects {}",
                features.dim(),
                self.cfg.input_dim
            )));
        }
        self.embed(&MaskedSequence::full(features.data().transpose()))
    }

    /// Stem on an already transposed, possibly padded `D x T` input.
    pub fn embed(&self, x: &MaskedSequence) -> Result<MaskedSequence> {
        if x.is_empty() {
            return Err(Error::data("empty sequence"));
        }
        let y = masked_conv1d(x, &self.stem, 1)?;
        masked_layer_norm(&y, &self.stem_norm.0, &self.stem_norm.1, self.cfg.ln_eps)
    }

    pub fn build_pyramid(&self, stem: &MaskedSequence, memory: Option<&SegmentMemory>) -> Result<Vec<PyramidLevel>> {
        let levels = self.cfg.num_levels;
        if stem.len() < self.cfg.min_sequence_len() {
            return Err(Error::data(format!(
                "sequence too short for {levels} levels: {} < {}",
                stem.len(),
                self.cfg.min_sequence_len()
            )));
        }
        if let Some(m) = memory {
            if m.levels.len() != levels {
                return Err(Error::config(format!("memory has {} levels, model {levels}", m.levels.len())));
            }
        }
        let mut out = Vec::with_capacity(levels);
        let mut x = stem.clone();
        for l in 0..levels {
            if l > 0 {
                let block = &self.down[l - 1];
                let y = masked_conv1d(&x, &block.conv, 2)?;
                let y = masked_layer_norm(&y, &block.gamma, &block.beta, self.cfg.ln_eps)?;
                let (mut f, mask) = y.into_parts();
                relu_in_place(&mut f);
                x = MaskedSequence::new(f, mask)?;
            }
            if let Some(block) = self.attention.get(l) {
                x = self.attend(block, &x, memory.map(|m| &m.levels[l]))?;
            }
            out.push(PyramidLevel {
                features: x.clone(),
                stride: 1 << l,
            });
        }
        Ok(out)
    }

    fn attend(&self, block: &AttentionBlock, x: &MaskedSequence, memory: Option<&Matrix>) -> Result<MaskedSequence> {
        let q = masked_conv1d(x, &block.q, 1)?.features().transpose();
        let k = masked_conv1d(x, &block.k, 1)?.features().transpose();
        let v = masked_conv1d(x, &block.v, 1)?.features().transpose();
        let projected_memory = match memory {
            Some(m) if m.rows() > 0 => {
                if m.cols() != self.cfg.channels {
                    return Err(Error::config(format!(
                        "memory width {} != {} channels",
                        m.cols(),
                        self.cfg.channels
                    )));
                }
                let seq = MaskedSequence::full(m.transpose());
                Some((
                    masked_conv1d(&seq, &block.k, 1)?.features().transpose(),
                    masked_conv1d(&seq, &block.v, 1)?.features().transpose(),
                ))
            }
            _ => None,
        };
        let mut opts = AttentionOptions::new(self.cfg.window).with_heads(self.cfg.num_heads);
        if let Some((mk, mv)) = &projected_memory {
            opts = opts.with_memory(MemoryKv { keys: mk, values: mv });
        }
        if let Some(b) = &self.position_bias {
            opts = opts.with_bias(b.as_ref());
        }
        let attended = windowed_attention_qkv(&q, &k, &v, x.mask(), &opts)?;
        let attended = MaskedSequence::new(attended.transpose(), x.mask().to_vec())?;
        let update = masked_conv1d(&attended, &block.out, 1)?;
        x.with_features(x.features().add(update.features())?)
    }

    pub fn neck_identity(&self, levels: &[PyramidLevel]) -> Result<Vec<PyramidLevel>> {
        match &self.neck {
            Neck::Identity(n) => n.apply(levels),
            Neck::Sppf(_) => Err(Error::config("model was built with the sppf neck")),
        }
    }

    pub fn neck_sppf(&self, levels: &[PyramidLevel]) -> Result<Vec<PyramidLevel>> {
        match &self.neck {
            Neck::Sppf(n) => n.apply(levels),
            Neck::Identity(_) => Err(Error::config("model was built with the identity neck")),
        }
    }

    /// Applies whichever neck the model was configured with.
    pub fn neck(&self, levels: &[PyramidLevel]) -> Result<Vec<PyramidLevel>> {
        match &self.neck {
            Neck::Identity(n) => n.apply(levels),
            Neck::Sppf(n) => n.apply(levels),
        }
    }

    pub fn heads_forward(&self, levels: &[PyramidLevel]) -> Result<RawPrediction> {
        let levels = levels
            .iter()
            .map(|level| {
                let x = &level.features;
                let cls = run_head(&self.cls_head, x, false)?;
                let reg = run_head(&self.reg_head, x, true)?;
                Ok(LevelPrediction {
                    cls_logits: cls.transpose(),
                    offsets: reg.transpose(),
                    mask: x.mask().to_vec(),
                    stride: level.stride,
                })
            })
            .collect::<Result<_>>()?;
        Ok(RawPrediction { levels })
    }

    /// Backbone, neck, points and heads for one video.
    pub fn forward(&self, features: &FeatureSequence) -> Result<ForwardOutput> {
        let stem = self.embed_stem(features)?;
        self.forward_stem(stem, None)
    }

    /// [`forward`](Self::forward) on a transposed `D x T` input with a
    /// validity mask, optionally attending to a previous segment's memory.
    pub fn forward_sequence(&self, x: &MaskedSequence, memory: Option<&SegmentMemory>) -> Result<ForwardOutput> {
        if x.channels() != self.cfg.input_dim {
            return Err(Error::config(format!(
                "input has {} channels, model expects {}",
                x.channels(),
                self.cfg.input_dim
            )));
        }
        let stem = self.embed(x)?;
        self.forward_stem(stem, memory)
    }

    fn forward_stem(&self, stem: MaskedSequence, memory: Option<&SegmentMemory>) -> Result<ForwardOutput> {
        let n_chunks = stem.valid_count();
        let backbone = self.build_pyramid(&stem, memory)?;
        let levels = self.neck(&backbone)?;
        let points = generate_points(&levels, &self.cfg)?;
        let raw = self.heads_forward(&levels)?;
        Ok(ForwardOutput {
            levels,
            points,
            raw,
            n_chunks,
        })
    }

    /// Backbone levels only (before the neck), e.g. to build a [`SegmentMemory`].
    pub fn backbone_levels(&self, x: &MaskedSequence, memory: Option<&SegmentMemory>) -> Result<Vec<PyramidLevel>> {
        let stem = self.embed(x)?;
        self.build_pyramid(&stem, memory)
    }
}

fn run_head(head: &Head, x: &MaskedSequence, clamp_output: bool) -> Result<Matrix> {
    let h = masked_conv1d(x, &head.hidden, 1)?;
    let (mut f, mask) = h.into_parts();
    relu_in_place(&mut f);
    let y = masked_conv1d(&MaskedSequence::new(f, mask)?, &head.out, 1)?;
    let (mut f, _) = y.into_parts();
    if clamp_output {
        relu_in_place(&mut f);
    }
    Ok(f)
}
