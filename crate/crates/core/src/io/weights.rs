use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{join_container, read_bytes, split_container, write_bytes};
use crate::error::{Error, Result};
use crate::model::{Tensor, WeightBundle};

pub const WEIGHTS_MAGIC: &[u8; 4] = b"AMAW";

/// One manifest row: where a tensor lives inside the blob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Relative to the first blob byte.
    pub byte_offset: usize,
}

/// Manifest [`encode_weights`] writes for `bundle`.
pub fn weights_manifest(bundle: &WeightBundle) -> Vec<ManifestEntry> {
    let mut offset = 0;
    bundle
        .iter()
        .map(|(name, t)| {
            let entry = ManifestEntry {
                name: name.clone(),
                shape: t.shape().to_vec(),
                byte_offset: offset,
            };
            offset += 4 * t.len();
            entry
        })
        .collect()
}

/// Tensors are laid out back to back in name order.
pub fn encode_weights(bundle: &WeightBundle) -> Vec<u8> {
    let manifest = weights_manifest(bundle);
    let mut blob = Vec::new();
    for (_, t) in bundle.iter() {
        for v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = serde_json::to_vec(&manifest).expect("manifest serializes");
    join_container(WEIGHTS_MAGIC, &header, &blob)
}

pub fn decode_weights(bytes: &[u8], label: &str) -> Result<WeightBundle> {
    let (header, blob) = split_container(bytes, WEIGHTS_MAGIC, label)?;
    let manifest: Vec<ManifestEntry> =
        serde_json::from_slice(header).map_err(|e| Error::format(label, format!("invalid manifest JSON: {e}")))?;
    let blob_start = bytes.len() - blob.len();

    let mut spans: Vec<(usize, usize, &str)> = Vec::with_capacity(manifest.len());
    for e in &manifest {
        let n: usize = e.shape.iter().product();
        let end = e
            .byte_offset
            .checked_add(n * 4)
            .filter(|&end| end <= blob.len())
            .ok_or_else(|| {
                Error::format(
                    label,
                    format!(
                        "tensor `{}` ({:?}) at offset {} extends past the {}-byte blob",
                        e.name,
                        e.shape,
                        e.byte_offset,
                        blob.len()
                    ),
                )
            })?;
        if e.byte_offset % 4 != 0 {
            return Err(Error::format(label, format!("tensor `{}` offset {} is not 4-aligned", e.name, e.byte_offset)));
        }
        spans.push((e.byte_offset, end, &e.name));
    }
    spans.sort();
    for pair in spans.windows(2) {
        let ((_, a_end, a), (b_start, _, b)) = (pair[0], pair[1]);
        if b_start < a_end {
            return Err(Error::format(label, format!("overlapping offsets: tensors `{a}` and `{b}`")));
        }
    }

    let mut bundle = WeightBundle::new();
    for e in manifest {
        if bundle.get(&e.name).is_some() {
            return Err(Error::format(label, format!("duplicate tensor `{}`", e.name)));
        }
        let n: usize = e.shape.iter().product();
        let raw = &blob[e.byte_offset..e.byte_offset + 4 * n];
        let mut data = Vec::with_capacity(n);
        for (i, chunk) in raw.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
            if !v.is_finite() {
                return Err(Error::data(format!(
                    "{label}: tensor `{}` has non-finite value at byte offset {}",
                    e.name,
                    blob_start + e.byte_offset + 4 * i
                )));
            }
            data.push(v);
        }
        bundle.insert(e.name, Tensor::new(e.shape, data)?);
    }
    Ok(bundle)
}

pub fn read_weights(path: impl AsRef<Path>) -> Result<WeightBundle> {
    let path = path.as_ref();
    decode_weights(&read_bytes(path)?, &path.display().to_string())
}

pub fn write_weights(path: impl AsRef<Path>, bundle: &WeightBundle) -> Result<()> {
    write_bytes(path.as_ref(), &encode_weights(bundle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::split_container;

    fn sample() -> WeightBundle {
        let mut b = WeightBundle::new();
        b.insert("a.w", Tensor::new(vec![2, 3, 1], (0..6).map(|v| v as f32 * 0.5).collect()).unwrap());
        b.insert("a.b", Tensor::new(vec![2], vec![-1.0, 1.0]).unwrap());
        b
    }

    fn with_manifest(manifest: &[ManifestEntry], blob: &[u8]) -> Vec<u8> {
        join_container(WEIGHTS_MAGIC, &serde_json::to_vec(manifest).unwrap(), blob)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let bytes = encode_weights(&sample());
        let back = decode_weights(&bytes, "mem").unwrap();
        assert_eq!(back, sample());
        assert_eq!(encode_weights(&back), bytes);
    }

    #[test]
    fn manifest_is_name_ordered() {
        let bytes = encode_weights(&sample());
        let (header, _) = split_container(&bytes, WEIGHTS_MAGIC, "mem").unwrap();
        let m: Vec<ManifestEntry> = serde_json::from_slice(header).unwrap();
        assert_eq!(m[0].name, "a.b");
        assert_eq!(m[1].byte_offset, 8);
    }

    #[test]
    fn overlapping_offsets_rejected() {
        let m = [
            ManifestEntry { name: "x".into(), shape: vec![2], byte_offset: 0 },
            ManifestEntry { name: "y".into(), shape: vec![2], byte_offset: 4 },
        ];
        let msg = decode_weights(&with_manifest(&m, &[0u8; 12]), "mem").unwrap_err().to_string();
        assert!(msg.contains("overlapping offsets"), "{msg}");
    }

    #[test]
    fn out_of_range_rejected() {
        let m = [ManifestEntry { name: "x".into(), shape: vec![4], byte_offset: 0 }];
        let err = decode_weights(&with_manifest(&m, &[0u8; 12]), "mem").unwrap_err();
        assert!(err.to_string().contains("extends past"), "{err}");
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = encode_weights(&sample());
        bytes[3] = b'F';
        assert!(decode_weights(&bytes, "mem").unwrap_err().to_string().contains("bad magic"));
    }
}
