use crate::error::{Error, Result};

/// Dense row-major matrix of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    /// Builds a matrix, rejecting a length mismatch or any non-finite entry.
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::config(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite value {} at index {i}",
                data[i]
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from row slices; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::config("ragged rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f32) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&Matrix]) -> Result<Matrix> {
        let cols = parts.first().map_or(0, |m| m.cols);
        if parts.iter().any(|m| m.cols != cols) {
            return Err(Error::config("vstack: column counts differ"));
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for m in parts {
            data.extend_from_slice(&m.data);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::config(format!(
                "add: shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Channel-major features (`C x T`) with a per-step validity mask.
///
/// Invalid columns always hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSequence {
    features: Matrix,
    mask: Vec<bool>,
}

impl MaskedSequence {
    /// Wraps `features`, zeroing the columns where `mask` is false.
    pub fn new(mut features: Matrix, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != features.cols() {
            return Err(Error::config(format!(
                "mask length {} does not match sequence length {}",
                mask.len(),
                features.cols()
            )));
        }
        zero_invalid(&mut features, &mask);
        Ok(Self { features, mask })
    }

    /// All steps valid.
    pub fn full(features: Matrix) -> Self {
        let mask = vec![true; features.cols()];
        Self { features, mask }
    }

    /// `features` with the first `valid` steps marked valid.
    pub fn with_valid_len(features: Matrix, valid: usize) -> Self {
        let t = features.cols();
        let mask = (0..t).map(|i| i < valid).collect();
        // infallible: lengths agree
        Self::new(features, mask).expect("mask length matches")
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn channels(&self) -> usize {
        self.features.rows()
    }

    pub fn len(&self) -> usize {
        self.features.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn into_parts(self) -> (Matrix, Vec<bool>) {
        (self.features, self.mask)
    }

    /// Replaces the features and re-zeroes masked columns.
    pub(crate) fn with_features(&self, features: Matrix) -> Result<Self> {
        Self::new(features, self.mask.clone())
    }
}

pub(crate) fn zero_invalid(m: &mut Matrix, mask: &[bool]) {
    let cols = m.cols();
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        for t in 0..cols {
            if !mask[t] {
                row[t] = 0.0;
            }
        }
    }
}
