use super::Matrix;

#[inline]
pub fn sigmoid_scalar(x: f32) -> f32 {
    // split on sign so exp never overflows
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| v.max(0.0))
}

pub(crate) fn relu_in_place(x: &mut Matrix) {
    for r in 0..x.rows() {
        for v in x.row_mut(r) {
            *v = v.max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        for i in -40..=40 {
            let x = i as f32 * 0.37;
            assert!((sigmoid_scalar(x) + sigmoid_scalar(-x) - 1.0).abs() < 1e-6);
            assert!(sigmoid_scalar(x) <= sigmoid_scalar(x + 0.1));
        }
        assert!(sigmoid_scalar(-100.0) >= 0.0);
        assert!(sigmoid_scalar(100.0) <= 1.0);
    }

    #[test]
    fn relu_clamps() {
        let m = Matrix::new(1, 3, vec![-3.0, 0.0, 3.0]).unwrap();
        assert_eq!(relu(&m).data(), &[0.0, 0.0, 3.0]);
    }
}
