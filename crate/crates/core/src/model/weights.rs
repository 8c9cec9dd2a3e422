use std::collections::BTreeMap;

use super::config::{AmaConfig, BackboneKind, NeckKind};
use crate::error::{Error, Result};
use crate::numerics::Conv1dWeights;

/// A named, shaped block of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::config(format!(
                "tensor of shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!("non-finite tensor value at element {i}")));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Named tensors keyed by parameter path, e.g. `cls_head.0.w`.
///
/// Iteration order is the lexicographic name order, which is also the
/// on-disk order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightBundle {
    tensors: BTreeMap<String, Tensor>,
}

impl WeightBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor> {
        self.tensors.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Looks up `name` and checks its shape.
    pub fn require(&self, name: &str, shape: &[usize]) -> Result<&Tensor> {
        let t = self
            .tensors
            .get(name)
            .ok_or_else(|| Error::config(format!("missing tensor `{name}`")))?;
        if t.shape() != shape {
            return Err(Error::config(format!(
                "tensor `{name}`: expected shape {shape:?}, found {:?}",
                t.shape()
            )));
        }
        Ok(t)
    }

    /// Checks every tensor `cfg` needs is present with the right shape.
    /// Extra tensors are allowed.
    pub fn validate(&self, cfg: &AmaConfig) -> Result<()> {
        for (name, shape) in required_tensors(cfg) {
            self.require(&name, &shape)?;
        }
        Ok(())
    }

    pub(crate) fn conv(&self, prefix: &str, c_out: usize, c_in: usize, k: usize) -> Result<Conv1dWeights> {
        let w = self.require(&format!("{prefix}.w"), &[c_out, c_in, k])?;
        let b = self.require(&format!("{prefix}.b"), &[c_out])?;
        Conv1dWeights::new(c_out, c_in, k, w.data().to_vec(), b.data().to_vec())
    }

    pub(crate) fn norm(&self, prefix: &str, c: usize) -> Result<(Vec<f32>, Vec<f32>)> {
        let g = self.require(&format!("{prefix}.gamma"), &[c])?;
        let b = self.require(&format!("{prefix}.beta"), &[c])?;
        Ok((g.data().to_vec(), b.data().to_vec()))
    }
}

fn conv_entries(out: &mut Vec<(String, Vec<usize>)>, prefix: &str, c_out: usize, c_in: usize, k: usize) {
    out.push((format!("{prefix}.w"), vec![c_out, c_in, k]));
    out.push((format!("{prefix}.b"), vec![c_out]));
}

fn norm_entries(out: &mut Vec<(String, Vec<usize>)>, prefix: &str, c: usize) {
    out.push((format!("{prefix}.gamma"), vec![c]));
    out.push((format!("{prefix}.beta"), vec![c]));
}

/// Names and shapes of every tensor the configured model reads.
///
/// Conv kernels are `[c_out, c_in, k]`; the neck entries depend on
/// `cfg.neck`, see [`all_tensors`] for a bundle usable with either neck.
pub fn required_tensors(cfg: &AmaConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = backbone_and_head_tensors(cfg);
    neck_tensors(&mut out, cfg, cfg.neck);
    out
}

/// Like [`required_tensors`], listing the tensors of both necks.
pub fn all_tensors(cfg: &AmaConfig) -> Vec<(String, Vec<usize>)> {
    let mut out = backbone_and_head_tensors(cfg);
    neck_tensors(&mut out, cfg, NeckKind::Identity);
    if cfg.channels % 2 == 0 {
        neck_tensors(&mut out, cfg, NeckKind::Sppf);
    }
    out
}

fn backbone_and_head_tensors(cfg: &AmaConfig) -> Vec<(String, Vec<usize>)> {
    let c = cfg.channels;
    let mut out = Vec::new();
    conv_entries(&mut out, "stem.conv", c, cfg.input_dim, 1);
    norm_entries(&mut out, "stem.ln", c);
    for l in 1..cfg.num_levels {
        conv_entries(&mut out, &format!("backbone.down.{l}.conv"), c, c, 3);
        norm_entries(&mut out, &format!("backbone.down.{l}.ln"), c);
    }
    if cfg.backbone == BackboneKind::ConvTransformer {
        for l in 0..cfg.num_levels {
            for proj in ["q", "k", "v", "out"] {
                conv_entries(&mut out, &format!("backbone.attn.{l}.{proj}"), c, c, 1);
            }
        }
    }
    conv_entries(&mut out, "cls_head.0", c, c, 1);
    conv_entries(&mut out, "cls_head.1", cfg.num_classes, c, 1);
    conv_entries(&mut out, "reg_head.0", c, c, 1);
    conv_entries(&mut out, "reg_head.1", 2, c, 1);
    out
}

fn neck_tensors(out: &mut Vec<(String, Vec<usize>)>, cfg: &AmaConfig, kind: NeckKind) {
    let c = cfg.channels;
    for l in 0..cfg.num_levels {
        match kind {
            NeckKind::Identity => norm_entries(out, &format!("neck.identity.{l}.ln"), c),
            NeckKind::Sppf => {
                conv_entries(out, &format!("neck.sppf.{l}.conv1"), c / 2, c, 1);
                conv_entries(out, &format!("neck.sppf.{l}.conv2"), c, 2 * c, 1);
                norm_entries(out, &format!("neck.sppf.{l}.ln"), c);
            }
        }
    }
}
