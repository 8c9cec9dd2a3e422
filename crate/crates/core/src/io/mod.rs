//! On-disk formats.
//!
//! * `AMAF` chunk-feature files ([`read_features`] / [`write_features`])
//! * `AMAW` weight bundles ([`read_weights`] / [`write_weights`])
//! * annotation JSON ([`read_annotations`] / [`write_annotations`])
//! * prediction JSON-lines and CSV ([`read_predictions`] / [`write_predictions`])
//!
//! Every writer is canonical: identical inputs give identical bytes.

mod annotations;
mod features;
mod predictions;
mod weights;

pub use annotations::{
    action_name, read_annotations, write_annotations, AnnotatedSegment, AnnotationSet, VideoAnnotation, ACTION_NAMES,
    NUM_ACTION_CLASSES,
};
pub use features::{decode_features, encode_features, read_features, write_features, FeatureHeader, FeatureSequence, FEATURE_MAGIC};
pub use predictions::{
    format_predictions_csv, format_predictions_jsonl, parse_predictions_csv, parse_predictions_jsonl, read_predictions,
    sort_predictions, write_predictions, PredictionRecord,
};
pub use weights::{
    decode_weights, encode_weights, read_weights, weights_manifest, write_weights, ManifestEntry, WEIGHTS_MAGIC,
};

use std::path::Path;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u8 = 1;

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `magic | version u8 | header_len u32 LE | header | payload`.
pub(crate) fn split_container<'a>(bytes: &'a [u8], magic: &[u8; 4], label: &str) -> Result<(&'a [u8], &'a [u8])> {
    if bytes.len() < 4 || &bytes[..4] != magic {
        return Err(Error::format(label, format!("bad magic (expected {:?})", std::str::from_utf8(magic).unwrap_or("?"))));
    }
    if bytes.len() < 9 {
        return Err(Error::format(label, "truncated header"));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::format(label, format!("unsupported version {} at offset 4", bytes[4])));
    }
    let header_len = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let end = 9usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| Error::format(label, format!("truncated header: declares {header_len} bytes at offset 9")))?;
    Ok((&bytes[9..end], &bytes[end..]))
}

pub(crate) fn join_container(magic: &[u8; 4], header: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + header.len() + payload.len());
    out.extend_from_slice(magic);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header);
    out.extend_from_slice(payload);
    out
}

/// Fixed 6-decimal rendering used by every text writer.
pub(crate) fn fixed6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub(crate) fn round6(v: f64) -> f64 {
    fixed6(v).parse().expect("formatted float parses")
}
