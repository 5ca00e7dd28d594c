//! Row-major dense vectors and matrices in `f64`.
//!
//! The typed wrappers validate shapes and return [`Error::Shape`]. The model's
//! inner loops call the unchecked slice kernels (`*_into`, `*_acc`) directly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn zeros(len: usize) -> Self {
        Self { data: vec![0.0; len] }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(data: Vec<f64>) -> Self {
        Self::from_vec(data)
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
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
            return Err(Error::shape(
                "DenseMatrix::from_vec",
                format!("{rows}x{cols}"),
                format!("len {}", data.len()),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_vec(rows.len(), cols, data)
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

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

fn check_len(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::shape(op, format!("len {a}"), format!("len {b}")))
    }
}

pub fn matvec(m: &DenseMatrix, v: &DenseVector) -> Result<DenseVector> {
    if m.cols != v.len() {
        return Err(Error::shape(
            "matvec",
            format!("{}x{}", m.rows, m.cols),
            format!("len {}", v.len()),
        ));
    }
    let mut out = vec![0.0; m.rows];
    matvec_into(&m.data, m.cols, v.as_slice(), &mut out);
    Ok(DenseVector::from_vec(out))
}

/// `mᵀ·v`.
pub fn matvec_transposed(m: &DenseMatrix, v: &DenseVector) -> Result<DenseVector> {
    if m.rows != v.len() {
        return Err(Error::shape(
            "matvec_transposed",
            format!("{}x{}", m.rows, m.cols),
            format!("len {}", v.len()),
        ));
    }
    let mut out = vec![0.0; m.cols];
    matvec_t_acc(&m.data, m.cols, v.as_slice(), &mut out);
    Ok(DenseVector::from_vec(out))
}

pub fn hadamard(a: &DenseVector, b: &DenseVector) -> Result<DenseVector> {
    check_len("hadamard", a.len(), b.len())?;
    Ok(DenseVector::from_vec(
        a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    ))
}

pub fn inner(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    check_len("inner", a.len(), b.len())?;
    Ok(dot(a.as_slice(), b.as_slice()))
}

pub fn relu(v: &DenseVector) -> DenseVector {
    DenseVector::from_vec(v.data.iter().map(|&x| x.max(0.0)).collect())
}

/// Lower clamp applied to probabilities before they reach a logarithm.
pub const PROB_EPS: f64 = 1e-15;

/// Logistic function, clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = m·x` for a row-major `m` with `cols` columns; `out.len()` rows.
#[inline]
pub fn matvec_into(m: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o = dot(row, x);
    }
}

/// `out += mᵀ·y`, `y.len()` rows.
#[inline]
pub fn matvec_t_acc(m: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
    for (&yi, row) in y.iter().zip(m.chunks_exact(cols)) {
        if yi != 0.0 {
            axpy(yi, row, out);
        }
    }
}

/// `g += y ⊗ x`, i.e. `g[i, j] += y[i]·x[j]`.
#[inline]
pub fn outer_acc(g: &mut [f64], y: &[f64], x: &[f64]) {
    for (&yi, row) in y.iter().zip(g.chunks_exact_mut(x.len())) {
        if yi != 0.0 {
            axpy(yi, x, row);
        }
    }
}

/// `out += alpha·x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(x) {
        *o += alpha * v;
    }
}
