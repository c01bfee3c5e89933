//! Dense column-major matrix used for the illumination pattern matrix.
//!
//! Column-major storage matches the on-disk ensemble archive layout and gives
//! the active-set solver contiguous access to individual patterns.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ColMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (k, col) in columns.iter().enumerate() {
            if col.len() != rows {
                return Err(Error::validation(format!(
                    "column {k} has length {} but the matrix has {} rows",
                    col.len(),
                    rows
                )));
            }
            data.extend_from_slice(col);
        }
        Ok(ColMatrix { rows, cols: columns.len(), data })
    }

    pub fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::validation(format!(
                "matrix data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        Ok(ColMatrix { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, k: usize) -> &[f64] {
        &self.data[k * self.rows..(k + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.rows..(k + 1) * self.rows]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    /// Column-major backing storage.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![0.0; self.rows];
        for (k, &xk) in x.iter().enumerate() {
            if xk != 0.0 {
                for (yi, &aik) in y.iter_mut().zip(self.col(k)) {
                    *yi += aik * xk;
                }
            }
        }
        y
    }

    /// y = A^T x.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols).map(|k| dot(self.col(k), x)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
