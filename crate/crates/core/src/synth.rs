//! Seeded synthetic datasets and hand-built weights.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with the dataset's
//! `u64` seed, so a dataset is reproducible on every platform. Background
//! features are i.i.d. normal; each planted action of label `c` adds a
//! pattern on feature channel `c`.
//!
//! [`diagnostic_weights`] builds a model that reads those channels back:
//! the class-`c` logit at stride 1 is `relu(x_c) - A/2`, every coarser
//! level is silent, and the regression head emits constant offsets that
//! reproduce the planted duration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{AnnotatedSegment, AnnotationSet, FeatureSequence, VideoAnnotation};
use crate::model::{all_tensors, AmaConfig, BackboneKind, NeckKind, Tensor, WeightBundle};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantShape {
    /// Constant amplitude over the whole segment.
    Boxcar,
    /// Linear ramp from 0 at the start to `A` at the center and back.
    Triangular,
}

impl std::str::FromStr for PlantShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boxcar" => Ok(PlantShape::Boxcar),
            "triangular" => Ok(PlantShape::Triangular),
            other => Err(Error::config(format!("unknown plant shape `{other}` (expected boxcar|triangular)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plant {
    pub label: u32,
    pub start_chunk: usize,
    pub duration_chunks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantLayout {
    /// Fixed plants, one list per video.
    Explicit(Vec<Vec<Plant>>),
    /// `per_video` plants of equal duration at random, separated positions.
    Random { per_video: usize, duration_chunks: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub seed: u64,
    pub n_videos: usize,
    /// Videos appended after the planted ones that carry background only.
    pub empty_videos: usize,
    pub n_chunks: usize,
    pub dim: usize,
    /// Labels plants are drawn from (1-based, each `< dim`).
    pub classes: Vec<u32>,
    pub layout: PlantLayout,
    pub amplitude: f32,
    pub shape: PlantShape,
    pub noise_std: f32,
    pub fps: f64,
    pub frames_per_chunk: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n_videos: 20,
            empty_videos: 0,
            n_chunks: 256,
            dim: 32,
            classes: (1..=16).collect(),
            layout: PlantLayout::Random {
                per_video: 4,
                duration_chunks: 8,
            },
            amplitude: 4.0,
            shape: PlantShape::Triangular,
            noise_std: 0.1,
            fps: 30.0,
            frames_per_chunk: 16,
        }
    }
}

/// Keeps planted segments clear of the sequence edges.
const EDGE_MARGIN: usize = 2;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_chunks == 0 || self.dim == 0 {
            return Err(Error::config("n_chunks and dim must be positive"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) || self.frames_per_chunk == 0 {
            return Err(Error::config("fps and frames_per_chunk must be positive"));
        }
        if !(self.noise_std >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::config("noise_std must be >= 0 and amplitude finite"));
        }
        for &c in &self.classes {
            if c == 0 || c as usize >= self.dim {
                return Err(Error::config(format!("class {c} has no feature channel (dim {})", self.dim)));
            }
        }
        match &self.layout {
            PlantLayout::Explicit(videos) => {
                if videos.len() != self.n_videos {
                    return Err(Error::config(format!(
                        "{} plant lists for {} videos",
                        videos.len(),
                        self.n_videos
                    )));
                }
                for (v, plants) in videos.iter().enumerate() {
                    check_plants(plants, self.n_chunks, self.dim).map_err(|e| Error::config(format!("video {v}: {e}")))?;
                }
            }
            PlantLayout::Random {
                per_video,
                duration_chunks,
            } => {
                if *duration_chunks == 0 {
                    return Err(Error::config("plant duration must be >= 1"));
                }
                if *per_video > 0 {
                    if self.classes.is_empty() {
                        return Err(Error::config("no classes to plant"));
                    }
                    if slot_len(self.n_chunks, *per_video) < 2 * duration_chunks {
                        return Err(Error::config(format!(
                            "{per_video} plants of {duration_chunks} chunks do not fit in {} chunks",
                            self.n_chunks
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The planted duration when all plants share one, as the diagnostic
    /// weights require.
    pub fn uniform_duration(&self) -> Option<usize> {
        match &self.layout {
            PlantLayout::Random { duration_chunks, .. } => Some(*duration_chunks),
            PlantLayout::Explicit(videos) => {
                let mut durations = videos.iter().flatten().map(|p| p.duration_chunks);
                let first = durations.next()?;
                durations.all(|d| d == first).then_some(first)
            }
        }
    }

    pub fn chunk_to_seconds(&self, chunk: usize) -> f64 {
        (chunk * self.frames_per_chunk) as f64 / self.fps
    }
}

fn check_plants(plants: &[Plant], n_chunks: usize, dim: usize) -> std::result::Result<(), String> {
    let mut sorted = plants.to_vec();
    sorted.sort_by_key(|p| p.start_chunk);
    for p in &sorted {
        if p.duration_chunks == 0 {
            return Err("plant duration must be >= 1".into());
        }
        if p.start_chunk + p.duration_chunks > n_chunks {
            return Err(format!("plant at chunk {} runs past {n_chunks} chunks", p.start_chunk));
        }
        if p.label == 0 || p.label as usize >= dim {
            return Err(format!("label {} has no feature channel", p.label));
        }
    }
    for w in sorted.windows(2) {
        if w[0].start_chunk + w[0].duration_chunks > w[1].start_chunk {
            return Err(format!("plants at chunks {} and {} overlap", w[0].start_chunk, w[1].start_chunk));
        }
    }
    Ok(())
}

fn slot_len(n_chunks: usize, per_video: usize) -> usize {
    n_chunks.saturating_sub(2 * EDGE_MARGIN) / per_video.max(1)
}

/// One slot per plant; each plant starts at a random position inside its
/// slot, leaving at least `duration` chunks of gap before the next slot.
fn random_plants(rng: &mut ChaCha8Rng, spec: &SynthSpec, per_video: usize, duration: usize) -> Vec<Plant> {
    let slot = slot_len(spec.n_chunks, per_video);
    (0..per_video)
        .map(|i| {
            let base = EDGE_MARGIN + i * slot;
            let slack = slot - 2 * duration;
            Plant {
                label: spec.classes[rng.gen_range(0..spec.classes.len())],
                start_chunk: base + rng.gen_range(0..=slack),
                duration_chunks: duration,
            }
        })
        .collect()
}

/// Pattern value at chunk `i` of a plant.
pub fn plant_profile(shape: PlantShape, amplitude: f32, plant: &Plant, i: usize) -> f32 {
    let d = plant.duration_chunks;
    if i < plant.start_chunk || i >= plant.start_chunk + d {
        return 0.0;
    }
    match shape {
        PlantShape::Boxcar => amplitude,
        PlantShape::Triangular => {
            let peak = plant.start_chunk + d / 2;
            let half = d as f32 / 2.0;
            let dist = (i as f32 - peak as f32).abs();
            amplitude * (1.0 - dist / half).max(0.0)
        }
    }
}

pub fn video_id(index: usize) -> String {
    format!("synth_{index:03}")
}

/// Features and matching annotations. Same spec, same bytes.
pub fn gen_dataset(spec: &SynthSpec) -> Result<(Vec<FeatureSequence>, AnnotationSet)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0f32, spec.noise_std).map_err(|e| Error::config(format!("noise: {e}")))?;
    let total = spec.n_videos + spec.empty_videos;
    let mut features = Vec::with_capacity(total);
    let mut videos = Vec::with_capacity(total);
    for v in 0..total {
        let plants = if v >= spec.n_videos {
            Vec::new()
        } else {
            match &spec.layout {
                PlantLayout::Explicit(all) => all[v].clone(),
                PlantLayout::Random {
                    per_video,
                    duration_chunks,
                } => random_plants(&mut rng, spec, *per_video, *duration_chunks),
            }
        };
        let mut data = Matrix::from_fn(spec.n_chunks, spec.dim, |_, _| {
            if spec.noise_std > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            }
        });
        for p in &plants {
            let ch = p.label as usize;
            for i in p.start_chunk..p.start_chunk + p.duration_chunks {
                let value = data.get(i, ch) + plant_profile(spec.shape, spec.amplitude, p, i);
                data.set(i, ch, value);
            }
        }
        let id = video_id(v);
        features.push(FeatureSequence::new(id.clone(), spec.fps, spec.frames_per_chunk, data)?);
        let mut segments: Vec<AnnotatedSegment> = plants
            .iter()
            .map(|p| AnnotatedSegment {
                label: p.label,
                start_s: spec.chunk_to_seconds(p.start_chunk),
                end_s: spec.chunk_to_seconds(p.start_chunk + p.duration_chunks),
            })
            .collect();
        segments.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        videos.push(VideoAnnotation {
            video_id: id,
            fps: spec.fps,
            duration_s: spec.chunk_to_seconds(spec.n_chunks),
            segments,
        });
    }
    Ok((features, AnnotationSet { videos }))
}

/// Model configuration sized for [`diagnostic_weights`] on `spec`.
pub fn diagnostic_config(spec: &SynthSpec, neck: NeckKind) -> AmaConfig {
    let k = spec.classes.iter().copied().max().unwrap_or(1) as usize;
    AmaConfig {
        input_dim: spec.dim,
        channels: 2 * k + 2,
        num_levels: 6,
        backbone: BackboneKind::ConvTransformer,
        neck,
        num_classes: k,
        frames_per_chunk: spec.frames_per_chunk,
        feat_stride: spec.frames_per_chunk,
        allow_any_input_dim: true,
        ..AmaConfig::default()
    }
}

/// Magnitude of the two constant anchor channels. Large anchors dominate
/// the per-step variance, so every layer norm acts as a fixed rescaling.
const ANCHOR: f32 = 1000.0;

/// Weights that detect the patterns planted by [`gen_dataset`].
///
/// Layout of the `C` hidden channels: `0..K` carry feature channels
/// `1..=K`, channel `K` is `+ANCHOR`, `K+1` is `-ANCHOR`, `K+2..2K+2`
/// carry the negated features so every step has zero channel mean. Layer
/// norm gains are set to the resulting standard deviation so features pass
/// through unchanged. Down-sampling and attention contribute nothing, the
/// SPPF neck forwards its reduced (unpooled) map, and the heads compute
/// `relu(x_c) - A/2` per class and constant offsets whose decoded segment
/// covers the planted chunks once the half-chunk timestamp centering is
/// applied. Both neck variants are included.
pub fn diagnostic_weights(cfg: &AmaConfig, spec: &SynthSpec) -> Result<WeightBundle> {
    cfg.validate()?;
    let k = cfg.num_classes;
    let c = cfg.channels;
    if cfg.input_dim < k + 1 {
        return Err(Error::config(format!("input_dim {} < num_classes + 1", cfg.input_dim)));
    }
    if c < 2 * k + 2 || c % 2 != 0 {
        return Err(Error::config(format!("diagnostic weights need an even channel count >= {}", 2 * k + 2)));
    }
    let duration = spec
        .uniform_duration()
        .ok_or_else(|| Error::config("diagnostic weights need plants of one duration"))?;

    let mut bundle = WeightBundle::new();
    for (name, shape) in all_tensors(cfg) {
        bundle.insert(name, Tensor::zeros(shape));
    }
    let gain = ANCHOR * (2.0 / c as f32).sqrt();
    let set = |bundle: &mut WeightBundle, name: &str, idx: usize, value: f32| {
        bundle.get_mut(name).expect("tensor listed by all_tensors").data_mut()[idx] = value;
    };
    let fill = |bundle: &mut WeightBundle, name: &str, value: f32| {
        bundle.get_mut(name).expect("tensor listed by all_tensors").data_mut().fill(value);
    };

    let d = cfg.input_dim;
    for ch in 0..k {
        set(&mut bundle, "stem.conv.w", ch * d + (ch + 1), 1.0);
        set(&mut bundle, "stem.conv.w", (k + 2 + ch) * d + (ch + 1), -1.0);
    }
    set(&mut bundle, "stem.conv.b", k, ANCHOR);
    set(&mut bundle, "stem.conv.b", k + 1, -ANCHOR);
    fill(&mut bundle, "stem.ln.gamma", gain);
    for l in 1..cfg.num_levels {
        fill(&mut bundle, &format!("backbone.down.{l}.ln.gamma"), 1.0);
    }
    for l in 0..cfg.num_levels {
        fill(&mut bundle, &format!("neck.identity.{l}.ln.gamma"), gain);
        let half = c / 2;
        // reduce: keep the first C/2 channels
        for ch in 0..half {
            set(&mut bundle, &format!("neck.sppf.{l}.conv1.w"), ch * c + ch, 1.0);
        }
        // expand: rebuild the full layout from the unpooled part of the concat
        let conv2 = format!("neck.sppf.{l}.conv2.w");
        for ch in 0..=k {
            set(&mut bundle, &conv2, ch * 2 * c + ch, 1.0);
        }
        set(&mut bundle, &conv2, (k + 1) * 2 * c + k, -1.0);
        for ch in 0..k {
            set(&mut bundle, &conv2, (k + 2 + ch) * 2 * c + ch, -1.0);
        }
        fill(&mut bundle, &format!("neck.sppf.{l}.ln.gamma"), gain);
    }
    for ch in 0..c {
        set(&mut bundle, "cls_head.0.w", ch * c + ch, 1.0);
    }
    for class in 0..k {
        set(&mut bundle, "cls_head.1.w", class * c + class, 1.0);
    }
    fill(&mut bundle, "cls_head.1.b", -spec.amplitude / 2.0);
    let left = (duration / 2) as f32 + 0.5;
    let right = duration as f32 - left;
    set(&mut bundle, "reg_head.1.b", 0, left);
    set(&mut bundle, "reg_head.1.b", 1, right);
    Ok(bundle)
}

/// Random weights for smoke tests: conv kernels ~ N(0, scale^2 / fan_in),
/// zero biases, unit gains.
pub fn random_weights(cfg: &AmaConfig, seed: u64, scale: f32) -> Result<WeightBundle> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bundle = WeightBundle::new();
    for (name, shape) in all_tensors(cfg) {
        let tensor = if name.ends_with(".w") {
            let fan_in = (shape[1] * shape[2]) as f32;
            let dist = Normal::new(0.0f32, scale / fan_in.sqrt()).map_err(|e| Error::config(format!("scale: {e}")))?;
            let n = shape.iter().product();
            Tensor::new(shape, (0..n).map(|_| dist.sample(&mut rng)).collect())?
        } else if name.ends_with(".gamma") {
            Tensor::filled(shape, 1.0)
        } else {
            Tensor::zeros(shape)
        };
        bundle.insert(name, tensor);
    }
    Ok(bundle)
}
