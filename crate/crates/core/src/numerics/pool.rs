use super::matrix::zero_invalid;
use super::{MaskedSequence, Matrix};
use crate::error::{Error, Result};

/// Stride-1 max pooling along time with `-inf` padding; `T` is preserved.
pub fn max_pool1d_same(x: &Matrix, k: usize) -> Result<Matrix> {
    pool_rows(x, k, None)
}

/// [`max_pool1d_same`] where masked steps act like padding (`-inf`) and the
/// output is zeroed on masked steps.
pub fn masked_max_pool1d_same(x: &MaskedSequence, k: usize) -> Result<MaskedSequence> {
    let mut out = pool_rows(x.features(), k, Some(x.mask()))?;
    zero_invalid(&mut out, x.mask());
    MaskedSequence::new(out, x.mask().to_vec())
}

fn pool_rows(x: &Matrix, k: usize, mask: Option<&[bool]>) -> Result<Matrix> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::config(format!("max-pool kernel must be odd, got {k}")));
    }
    let (c, t) = x.shape();
    let half = k / 2;
    let valid = |i: usize| mask.map_or(true, |m| m[i]);
    let mut out = Matrix::zeros(c, t);
    for r in 0..c {
        let row = x.row(r);
        let dst = out.row_mut(r);
        for (i, d) in dst.iter_mut().enumerate() {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(t.saturating_sub(1));
            let mut best = f32::NEG_INFINITY;
            for j in lo..=hi {
                if valid(j) && row[j] > best {
                    best = row[j];
                }
            }
            // only reachable for a masked centre, which gets zeroed anyway
            *d = if best.is_finite() { best } else { 0.0 };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f32]) -> Matrix {
        Matrix::new(1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn pools_with_window_three() {
        let y = max_pool1d_same(&row(&[1., 3., 2., 5., 4.]), 3).unwrap();
        assert_eq!(y.data(), &[3., 3., 5., 5., 5.]);
    }

    #[test]
    fn identity_and_constant_cases() {
        let x = row(&[1., -3., 2.]);
        assert_eq!(max_pool1d_same(&x, 1).unwrap(), x);
        let c = row(&[-2.5; 6]);
        assert_eq!(max_pool1d_same(&c, 5).unwrap(), c);
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(max_pool1d_same(&row(&[1.0]), 4).is_err());
    }

    #[test]
    fn masked_steps_do_not_leak() {
        // the zero in the padded tail must not beat the negative valid values
        let x = MaskedSequence::with_valid_len(row(&[-1., -2., 9.]), 2);
        let y = masked_max_pool1d_same(&x, 3).unwrap();
        assert_eq!(y.features().data(), &[-1., -1., 0.]);
    }
}
