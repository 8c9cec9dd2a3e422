//! Scaled dot-product attention: the dense form and a local-window form
//! whose key/value set can be extended with cached memory rows from a
//! previous segment.

use super::conv::dot;
use super::{MaskedSequence, Matrix};
use crate::error::{Error, Result};

/// Additive score bias as a function of `key_step - query_step`.
///
/// Only applied to in-segment keys; memory rows carry no position.
pub trait RelativePositionBias: Sync {
    fn bias(&self, offset: i64) -> f32;
}

/// Key/value rows prepended to every query's window.
#[derive(Debug, Clone, Copy)]
pub struct MemoryKv<'a> {
    pub keys: &'a Matrix,
    pub values: &'a Matrix,
}

#[derive(Clone, Copy)]
pub struct AttentionOptions<'a> {
    /// Odd number of steps each query sees, centred on itself.
    pub window: usize,
    pub heads: usize,
    pub memory: Option<MemoryKv<'a>>,
    pub bias: Option<&'a dyn RelativePositionBias>,
}

impl<'a> AttentionOptions<'a> {
    pub fn new(window: usize) -> Self {
        Self {
            window,
            heads: 1,
            memory: None,
            bias: None,
        }
    }

    pub fn with_memory(mut self, memory: MemoryKv<'a>) -> Self {
        self.memory = Some(memory);
        self
    }

    pub fn with_heads(mut self, heads: usize) -> Self {
        self.heads = heads;
        self
    }

    pub fn with_bias(mut self, bias: &'a dyn RelativePositionBias) -> Self {
        self.bias = Some(bias);
        self
    }
}

/// Row-stochastic `softmax(Q K^T / sqrt(D))`, shape `T_q x T_k`.
pub fn attention_weights(q: &Matrix, k: &Matrix) -> Result<Matrix> {
    let d = q.cols();
    if d == 0 {
        return Err(Error::config("attention over zero-width embeddings"));
    }
    if k.cols() != d {
        return Err(Error::config(format!("query width {d} != key width {}", k.cols())));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut w = Matrix::zeros(q.rows(), k.rows());
    let mut scores = vec![0.0f64; k.rows()];
    for i in 0..q.rows() {
        for (j, s) in scores.iter_mut().enumerate() {
            *s = dot(q.row(i), k.row(j)) * scale;
        }
        softmax_in_place(&mut scores);
        for (j, s) in scores.iter().enumerate() {
            w.set(i, j, *s as f32);
        }
    }
    Ok(w)
}

/// `softmax(Q K^T / sqrt(D)) V` over all key rows.
pub fn dense_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<Matrix> {
    let d = q.cols();
    if d == 0 {
        return Err(Error::config("attention over zero-width embeddings"));
    }
    if k.cols() != d || k.rows() != v.rows() {
        return Err(Error::config(format!(
            "attention shapes disagree: q {:?}, k {:?}, v {:?}",
            q.shape(),
            k.shape(),
            v.shape()
        )));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut out = Matrix::zeros(q.rows(), v.cols());
    let mut scores = vec![0.0f64; k.rows()];
    for i in 0..q.rows() {
        for (j, s) in scores.iter_mut().enumerate() {
            *s = dot(q.row(i), k.row(j)) * scale;
        }
        softmax_in_place(&mut scores);
        let dst = out.row_mut(i);
        for (c, o) in dst.iter_mut().enumerate() {
            *o = scores.iter().enumerate().map(|(j, &w)| w * v.get(j, c) as f64).sum::<f64>() as f32;
        }
    }
    Ok(out)
}

/// Self-attention of a channel-major sequence (`D x T`) over a local window,
/// with the sequence itself serving as queries, keys and values.
///
/// `memory` rows (`M x D`) are prepended to every valid position's keys and
/// values, so a position attends to `[memory, window]`.
pub fn windowed_attention(x: &MaskedSequence, window: usize, memory: Option<&Matrix>) -> Result<MaskedSequence> {
    let h = x.features().transpose();
    let mut opts = AttentionOptions::new(window);
    if let Some(m) = memory {
        opts = opts.with_memory(MemoryKv { keys: m, values: m });
    }
    let out = windowed_attention_qkv(&h, &h, &h, x.mask(), &opts)?;
    x.with_features(out.transpose())
}

/// Local-window attention on time-major `T x D` projections.
///
/// Masked query rows produce zeros; masked keys are never attended to.
pub fn windowed_attention_qkv(q: &Matrix, k: &Matrix, v: &Matrix, mask: &[bool], opts: &AttentionOptions<'_>) -> Result<Matrix> {
    let plan = Plan::new(q, k, v, mask, opts)?;
    let mut out = Matrix::zeros(q.rows(), v.cols());
    for t in 0..q.rows() {
        if !mask[t] {
            continue;
        }
        for head in 0..opts.heads {
            let weights = plan.row_weights(t, head);
            let (lo, hi) = plan.head_cols(head, v.cols());
            for c in lo..hi {
                let acc: f64 = weights.iter().map(|&(key, w)| w * plan.value(key, c) as f64).sum();
                out.set(t, c, acc as f32);
            }
        }
    }
    Ok(out)
}

/// Index of a key in a windowed attention row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyRef {
    Memory(usize),
    Step(usize),
}

/// Per-query attention weights of a windowed attention call (one head).
#[derive(Debug, Clone)]
pub struct AttentionWeights {
    pub rows: Vec<Vec<(KeyRef, f64)>>,
}

impl AttentionWeights {
    pub fn row_sum(&self, t: usize) -> f64 {
        self.rows[t].iter().map(|(_, w)| w).sum()
    }
}

/// The weights [`windowed_attention`] would use for head 0.
pub fn windowed_attention_weights(x: &MaskedSequence, window: usize, memory: Option<&Matrix>) -> Result<AttentionWeights> {
    let h = x.features().transpose();
    let mut opts = AttentionOptions::new(window);
    if let Some(m) = memory {
        opts = opts.with_memory(MemoryKv { keys: m, values: m });
    }
    let plan = Plan::new(&h, &h, &h, x.mask(), &opts)?;
    let rows = (0..h.rows())
        .map(|t| if x.mask()[t] { plan.row_weights(t, 0) } else { Vec::new() })
        .collect();
    Ok(AttentionWeights { rows })
}

struct Plan<'a> {
    q: &'a Matrix,
    k: &'a Matrix,
    v: &'a Matrix,
    mask: &'a [bool],
    opts: &'a AttentionOptions<'a>,
    head_dim: usize,
}

impl<'a> Plan<'a> {
    fn new(q: &'a Matrix, k: &'a Matrix, v: &'a Matrix, mask: &'a [bool], opts: &'a AttentionOptions<'a>) -> Result<Self> {
        if opts.window % 2 == 0 {
            return Err(Error::config(format!("attention window must be odd, got {}", opts.window)));
        }
        let d = q.cols();
        if d == 0 {
            return Err(Error::config("attention over zero-width embeddings"));
        }
        if opts.heads == 0 || d % opts.heads != 0 || v.cols() % opts.heads != 0 {
            return Err(Error::config(format!("{} heads do not divide width {d}", opts.heads)));
        }
        if k.shape() != q.shape() || v.rows() != q.rows() || mask.len() != q.rows() {
            return Err(Error::config(format!(
                "attention shapes disagree: q {:?}, k {:?}, v {:?}, mask {}",
                q.shape(),
                k.shape(),
                v.shape(),
                mask.len()
            )));
        }
        if let Some(m) = opts.memory {
            if m.keys.cols() != d || m.values.cols() != v.cols() || m.keys.rows() != m.values.rows() {
                return Err(Error::config(format!(
                    "memory shapes {:?}/{:?} do not fit width {d}",
                    m.keys.shape(),
                    m.values.shape()
                )));
            }
        }
        Ok(Self {
            q,
            k,
            v,
            mask,
            opts,
            head_dim: d / opts.heads,
        })
    }

    fn head_cols(&self, head: usize, width: usize) -> (usize, usize) {
        let w = width / self.opts.heads;
        (head * w, (head + 1) * w)
    }

    fn value(&self, key: KeyRef, c: usize) -> f32 {
        match key {
            KeyRef::Memory(i) => self.opts.memory.expect("memory key").values.get(i, c),
            KeyRef::Step(s) => self.v.get(s, c),
        }
    }

    fn row_weights(&self, t: usize, head: usize) -> Vec<(KeyRef, f64)> {
        let (lo, hi) = (head * self.head_dim, (head + 1) * self.head_dim);
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let query = &self.q.row(t)[lo..hi];
        let half = self.opts.window / 2;
        let n = self.q.rows();

        let mut keys = Vec::new();
        let mut scores = Vec::new();
        if let Some(m) = self.opts.memory {
            for i in 0..m.keys.rows() {
                keys.push(KeyRef::Memory(i));
                scores.push(dot(query, &m.keys.row(i)[lo..hi]) * scale);
            }
        }
        for s in t.saturating_sub(half)..=(t + half).min(n - 1) {
            if !self.mask[s] {
                continue;
            }
            let mut score = dot(query, &self.k.row(s)[lo..hi]) * scale;
            if let Some(b) = self.opts.bias {
                score += b.bias(s as i64 - t as i64) as f64;
            }
            keys.push(KeyRef::Step(s));
            scores.push(score);
        }
        softmax_in_place(&mut scores);
        keys.into_iter().zip(scores).collect()
    }
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
}
