//! Deterministic numeric kernels the detector is assembled from.
//!
//! Everything here operates on channel-major sequences (`C x T` matrices)
//! in 32-bit floats. Dot products accumulate in `f64` and always sum in the
//! same order, so identical inputs give bit-identical outputs.

mod activation;
mod attention;
mod conv;
mod matrix;
mod norm;
mod pool;

pub use activation::{relu, sigmoid, sigmoid_scalar};
pub(crate) use activation::relu_in_place;
pub use attention::{
    attention_weights, dense_attention, windowed_attention, windowed_attention_qkv,
    windowed_attention_weights, AttentionOptions, AttentionWeights, KeyRef, MemoryKv,
    RelativePositionBias,
};
pub use conv::{masked_conv1d, Conv1dWeights};
pub use norm::{layer_norm, masked_layer_norm, DEFAULT_LN_EPS};
pub use pool::{masked_max_pool1d_same, max_pool1d_same};
pub use matrix::{MaskedSequence, Matrix};
