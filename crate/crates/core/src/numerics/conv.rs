use super::{MaskedSequence, Matrix};
use crate::error::{Error, Result};

/// Kernel and bias of a 1D convolution, laid out `[c_out, c_in, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dWeights {
    c_out: usize,
    c_in: usize,
    k: usize,
    weight: Vec<f32>,
    bias: Vec<f32>,
}

impl Conv1dWeights {
    pub fn new(c_out: usize, c_in: usize, k: usize, weight: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if k % 2 == 0 {
            return Err(Error::config(format!("conv kernel size must be odd, got {k}")));
        }
        if weight.len() != c_out * c_in * k {
            return Err(Error::config(format!(
                "conv weight has {} values, expected {c_out}x{c_in}x{k}",
                weight.len()
            )));
        }
        if bias.len() != c_out {
            return Err(Error::config(format!(
                "conv bias has {} values, expected {c_out}",
                bias.len()
            )));
        }
        if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite conv weight"));
        }
        Ok(Self {
            c_out,
            c_in,
            k,
            weight,
            bias,
        })
    }

    /// `k = 1` kernel with unit weights on the diagonal.
    pub fn identity(channels: usize) -> Self {
        let mut weight = vec![0.0; channels * channels];
        for c in 0..channels {
            weight[c * channels + c] = 1.0;
        }
        Self {
            c_out: channels,
            c_in: channels,
            k: 1,
            weight,
            bias: vec![0.0; channels],
        }
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn kernel_size(&self) -> usize {
        self.k
    }

    pub fn weight(&self) -> &[f32] {
        &self.weight
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    #[inline]
    fn w(&self, o: usize, i: usize, j: usize) -> f32 {
        self.weight[(o * self.c_in + i) * self.k + j]
    }
}

/// Masked 1D cross-correlation with symmetric zero padding.
///
/// Output length is `ceil(T / stride)`; output step `u` is centred on input
/// step `u * stride` and inherits its mask bit. Invalid inputs already hold
/// zeros, and invalid outputs are zeroed after the bias is added.
pub fn masked_conv1d(x: &MaskedSequence, conv: &Conv1dWeights, stride: usize) -> Result<MaskedSequence> {
    if !(1..=2).contains(&stride) {
        return Err(Error::config(format!("conv stride must be 1 or 2, got {stride}")));
    }
    if x.channels() != conv.c_in {
        return Err(Error::config(format!(
            "conv expects {} input channels, sequence has {}",
            conv.c_in,
            x.channels()
        )));
    }
    let t_in = x.len();
    let t_out = t_in.div_ceil(stride);
    let pad = conv.k / 2;
    let mask_out: Vec<bool> = (0..t_out).map(|u| x.mask()[u * stride]).collect();

    // time-major copy of the input and [o][j][i] copy of the kernel keep
    // the innermost loop on contiguous memory
    let xt = x.features().transpose();
    let mut packed = Vec::with_capacity(conv.weight.len());
    for o in 0..conv.c_out {
        for j in 0..conv.k {
            for i in 0..conv.c_in {
                packed.push(conv.w(o, i, j));
            }
        }
    }

    let mut out = Matrix::zeros(conv.c_out, t_out);
    for (u, _) in mask_out.iter().enumerate().filter(|(_, &m)| m) {
        let centre = u * stride;
        for o in 0..conv.c_out {
            let mut acc = conv.bias[o] as f64;
            for j in 0..conv.k {
                let Some(t) = (centre + j).checked_sub(pad) else {
                    continue;
                };
                if t >= t_in {
                    continue;
                }
                let wrow = &packed[(o * conv.k + j) * conv.c_in..(o * conv.k + j + 1) * conv.c_in];
                acc += dot(wrow, xt.row(t));
            }
            out.set(o, u, acc as f32);
        }
    }
    MaskedSequence::new(out, mask_out)
}

#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}
