//! Dense 64-bit kernels used by the engine and the analysis toolkit.
//!
//! Accumulation is always sequential in index order; nothing here
//! reassociates sums, so reruns are bit-stable.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// Copy of columns `[start, start + width)`.
    pub fn column_block(&self, start: usize, width: usize) -> Matrix {
        let mut out = Matrix::zeros(self.rows, width);
        for r in 0..self.rows {
            out.row_mut(r)
                .copy_from_slice(&self.row(r)[start..start + width]);
        }
        out
    }
}

/// Standard matrix product. For each output cell the sum runs over the inner
/// index in increasing order.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, bv) in out_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// A score row plus an attendability mask (`true` = attendable).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedRow {
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl MaskedRow {
    pub fn new(values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != mask.len() {
            return Err(Error::Shape(format!(
                "{} values but {} mask entries",
                values.len(),
                mask.len()
            )));
        }
        if !mask.iter().any(|m| *m) {
            return Err(Error::contract("masked row has no attendable position"));
        }
        Ok(Self { values, mask })
    }

    /// Every entry attendable.
    pub fn dense(values: Vec<f64>) -> Result<Self> {
        let mask = vec![true; values.len()];
        Self::new(values, mask)
    }

    /// Entries `0..=last` attendable, the rest masked.
    pub fn causal(values: Vec<f64>, last: usize) -> Result<Self> {
        let mask = (0..values.len()).map(|j| j <= last).collect();
        Self::new(values, mask)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Masked softmax. Masked entries are excluded from the max and the
/// normaliser and come out as exactly zero.
pub fn softmax_row(row: &MaskedRow) -> Vec<f64> {
    let mut max = f64::NEG_INFINITY;
    for (v, m) in row.values.iter().zip(&row.mask) {
        if *m && *v > max {
            max = *v;
        }
    }
    let mut out = vec![0.0; row.values.len()];
    let mut total = 0.0;
    for ((o, v), m) in out.iter_mut().zip(&row.values).zip(&row.mask) {
        if *m {
            *o = (v - max).exp();
            total += *o;
        }
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    out
}

/// Softmax over every entry of `values`.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = out.iter().sum();
    for o in out.iter_mut() {
        *o /= total;
    }
    out
}

fn non_empty(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        Err(Error::contract(format!("{what} of an empty slice")))
    } else {
        Ok(())
    }
}

pub fn stable_sum(values: &[f64]) -> Result<f64> {
    non_empty(values, "sum")?;
    Ok(values.iter().fold(0.0, |acc, v| acc + v))
}

pub fn mean(values: &[f64]) -> Result<f64> {
    Ok(stable_sum(values)? / values.len() as f64)
}

/// Two-pass population variance.
pub fn variance(values: &[f64]) -> Result<f64> {
    let m = mean(values)?;
    let ss = values.iter().fold(0.0, |acc, v| acc + (v - m) * (v - m));
    Ok(ss / values.len() as f64)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if *v <= b => {}
            _ => best = Some((i, *v)),
        }
    }
    best.map(|(i, _)| i)
}
