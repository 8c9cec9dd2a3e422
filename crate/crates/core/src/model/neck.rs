//! Identity and SPPF-1D necks.

use super::PyramidLevel;
use crate::error::Result;
use crate::numerics::{masked_conv1d, masked_layer_norm, masked_max_pool1d_same, Conv1dWeights, MaskedSequence, Matrix};

pub(crate) struct IdentityNeck {
    pub norms: Vec<(Vec<f32>, Vec<f32>)>,
    pub eps: f32,
}

impl IdentityNeck {
    pub fn apply(&self, levels: &[PyramidLevel]) -> Result<Vec<PyramidLevel>> {
        levels
            .iter()
            .zip(&self.norms)
            .map(|(level, (g, b))| {
                Ok(PyramidLevel {
                    features: masked_layer_norm(&level.features, g, b, self.eps)?,
                    stride: level.stride,
                })
            })
            .collect()
    }
}

pub(crate) struct SppfBlock {
    pub reduce: Conv1dWeights,
    pub expand: Conv1dWeights,
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
}

/// The reduced map `x` and its three successive poolings `y1, y2, y3`.
pub fn sppf_pool_cascade(x: &MaskedSequence, k: usize) -> Result<[MaskedSequence; 3]> {
    let y1 = masked_max_pool1d_same(x, k)?;
    let y2 = masked_max_pool1d_same(&y1, k)?;
    let y3 = masked_max_pool1d_same(&y2, k)?;
    Ok([y1, y2, y3])
}

impl SppfBlock {
    pub fn apply(&self, x: &MaskedSequence, k: usize, eps: f32) -> Result<MaskedSequence> {
        let reduced = masked_conv1d(x, &self.reduce, 1)?;
        let [y1, y2, y3] = sppf_pool_cascade(&reduced, k)?;
        let cat = Matrix::vstack(&[reduced.features(), y1.features(), y2.features(), y3.features()])?;
        let cat = MaskedSequence::new(cat, x.mask().to_vec())?;
        let fused = masked_conv1d(&cat, &self.expand, 1)?;
        masked_layer_norm(&fused, &self.gamma, &self.beta, eps)
    }
}

pub(crate) struct SppfNeck {
    pub blocks: Vec<SppfBlock>,
    pub kernel: usize,
    pub eps: f32,
}

impl SppfNeck {
    pub fn apply(&self, levels: &[PyramidLevel]) -> Result<Vec<PyramidLevel>> {
        levels
            .iter()
            .zip(&self.blocks)
            .map(|(level, block)| {
                Ok(PyramidLevel {
                    features: block.apply(&level.features, self.kernel, self.eps)?,
                    stride: level.stride,
                })
            })
            .collect()
    }
}
