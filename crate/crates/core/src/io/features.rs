use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{join_container, read_bytes, split_container, write_bytes};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const FEATURE_MAGIC: &[u8; 4] = b"AMAF";

/// Chunk-level features of one video: an `n_chunks x dim` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub video_id: String,
    pub fps: f64,
    pub frames_per_chunk: usize,
    data: Matrix,
}

impl FeatureSequence {
    pub fn new(video_id: impl Into<String>, fps: f64, frames_per_chunk: usize, data: Matrix) -> Result<Self> {
        let seq = Self {
            video_id: video_id.into(),
            fps,
            frames_per_chunk,
            data,
        };
        seq.header().validate()?;
        Ok(seq)
    }

    /// Skips the `n_chunks >= 1` check; for exercising degenerate inputs.
    pub fn new_unchecked(video_id: impl Into<String>, fps: f64, frames_per_chunk: usize, data: Matrix) -> Self {
        Self {
            video_id: video_id.into(),
            fps,
            frames_per_chunk,
            data,
        }
    }

    pub fn n_chunks(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn header(&self) -> FeatureHeader {
        FeatureHeader {
            video_id: self.video_id.clone(),
            n_chunks: self.n_chunks(),
            dim: self.dim(),
            fps: self.fps,
            frames_per_chunk: self.frames_per_chunk,
        }
    }
}

/// JSON header of an `AMAF` file. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureHeader {
    pub video_id: String,
    pub n_chunks: usize,
    pub dim: usize,
    pub fps: f64,
    pub frames_per_chunk: usize,
}

impl FeatureHeader {
    fn validate(&self) -> Result<()> {
        if self.n_chunks == 0 {
            return Err(Error::data("empty sequence: n_chunks must be >= 1"));
        }
        if self.dim == 0 {
            return Err(Error::data("dim must be >= 1"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::data(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frames_per_chunk == 0 {
            return Err(Error::data("frames_per_chunk must be >= 1"));
        }
        Ok(())
    }
}

pub fn encode_features(seq: &FeatureSequence) -> Vec<u8> {
    let header = serde_json::to_vec(&seq.header()).expect("header serializes");
    let mut payload = Vec::with_capacity(seq.data.data().len() * 4);
    for v in seq.data.data() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    join_container(FEATURE_MAGIC, &header, &payload)
}

/// Parses an `AMAF` byte buffer; `label` names the source in errors.
pub fn decode_features(bytes: &[u8], label: &str) -> Result<FeatureSequence> {
    let (header, payload) = split_container(bytes, FEATURE_MAGIC, label)?;
    let header: FeatureHeader =
        serde_json::from_slice(header).map_err(|e| Error::format(label, format!("invalid header JSON: {e}")))?;
    header.validate()?;
    let expected = header.n_chunks * header.dim;
    if payload.len() != expected * 4 {
        return Err(Error::format(
            label,
            format!(
                "payload size mismatch: header declares {}x{} = {expected} values ({} bytes), found {} bytes",
                header.n_chunks,
                header.dim,
                expected * 4,
                payload.len()
            ),
        ));
    }
    let payload_start = bytes.len() - payload.len();
    let mut data = Vec::with_capacity(expected);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(Error::data(format!(
                "{label}: non-finite value {v} at byte offset {} (chunk {}, dim {})",
                payload_start + 4 * i,
                i / header.dim,
                i % header.dim
            )));
        }
        data.push(v);
    }
    let data = Matrix::new(header.n_chunks, header.dim, data)?;
    Ok(FeatureSequence {
        video_id: header.video_id,
        fps: header.fps,
        frames_per_chunk: header.frames_per_chunk,
        data,
    })
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSequence> {
    let path = path.as_ref();
    decode_features(&read_bytes(path)?, &path.display().to_string())
}

pub fn write_features(path: impl AsRef<Path>, seq: &FeatureSequence) -> Result<()> {
    write_bytes(path.as_ref(), &encode_features(seq))
}
