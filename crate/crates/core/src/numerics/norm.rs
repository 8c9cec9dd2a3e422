use super::matrix::zero_invalid;
use super::{MaskedSequence, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_LN_EPS: f32 = 1e-5;

/// Normalizes every time step across channels, then applies `gamma`/`beta`.
///
/// Uses the biased variance. A column with zero variance and `eps = 0`
/// normalizes to zeros instead of dividing by zero.
pub fn layer_norm(x: &Matrix, gamma: &[f32], beta: &[f32], eps: f32) -> Result<Matrix> {
    let (c, t) = x.shape();
    if c == 0 {
        return Err(Error::config("layer norm over zero channels"));
    }
    if gamma.len() != c || beta.len() != c {
        return Err(Error::config(format!(
            "layer norm affine has {}/{} entries, expected {c}",
            gamma.len(),
            beta.len()
        )));
    }
    if !(eps >= 0.0) {
        return Err(Error::config(format!("layer norm eps must be >= 0, got {eps}")));
    }
    let mut out = Matrix::zeros(c, t);
    for col in 0..t {
        let mean = (0..c).map(|r| x.get(r, col) as f64).sum::<f64>() / c as f64;
        let var = (0..c)
            .map(|r| {
                let d = x.get(r, col) as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / c as f64;
        let denom = (var + eps as f64).sqrt();
        for r in 0..c {
            let z = if denom > 0.0 {
                (x.get(r, col) as f64 - mean) / denom
            } else {
                0.0
            };
            out.set(r, col, (z * gamma[r] as f64 + beta[r] as f64) as f32);
        }
    }
    Ok(out)
}

/// [`layer_norm`] that keeps masked columns at zero.
pub fn masked_layer_norm(x: &MaskedSequence, gamma: &[f32], beta: &[f32], eps: f32) -> Result<MaskedSequence> {
    let mut out = layer_norm(x.features(), gamma, beta, eps)?;
    zero_invalid(&mut out, x.mask());
    MaskedSequence::new(out, x.mask().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f32]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn constant_column_normalizes_to_zero() {
        let y = layer_norm(&col(&[2.0, 2.0, 2.0]), &[1.0; 3], &[0.0; 3], DEFAULT_LN_EPS).unwrap();
        assert!(y.data().iter().all(|v| v.abs() < 1e-6));
        let y = layer_norm(&col(&[2.0, 2.0, 2.0]), &[1.0; 3], &[0.0; 3], 0.0).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn unit_spread_column() {
        // mean 2, biased variance 2/3
        let y = layer_norm(&col(&[1.0, 2.0, 3.0]), &[1.0; 3], &[0.0; 3], 0.0).unwrap();
        let want = [-1.224_744_9, 0.0, 1.224_744_9];
        for (a, b) in y.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_gamma_yields_beta() {
        let y = layer_norm(&col(&[5.0, -1.0, 0.5]), &[0.0; 3], &[0.1, 0.2, 0.3], DEFAULT_LN_EPS).unwrap();
        assert_eq!(y.data(), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn empty_channels_rejected() {
        let x = Matrix::zeros(0, 4);
        assert!(matches!(layer_norm(&x, &[], &[], 1e-5), Err(Error::Config(_))));
    }

    #[test]
    fn masked_variant_keeps_padding_zero() {
        let x = MaskedSequence::with_valid_len(Matrix::from_fn(3, 4, |r, c| (r + c) as f32), 2);
        let y = masked_layer_norm(&x, &[1.0; 3], &[7.0; 3], DEFAULT_LN_EPS).unwrap();
        assert_eq!(y.features().get(0, 3), 0.0);
        assert!(y.features().get(0, 0) != 0.0);
    }
}
