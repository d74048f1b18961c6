//! Row-major dense matrix plus the handful of kernels the encoder needs.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data: Vec<T> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Matrix::from_vec(rows.len(), cols, data)
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

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: T) {
        self.data[r * self.cols + c] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| U::lit(v.as_f64())).collect() }
    }

    pub fn add_assign(&mut self, other: &Matrix<T>) {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: T) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn sum_of_squares(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }
}

/// `x · w + b` with `x: n×in`, `w: in×out`, `b: 1×out`.
pub(crate) fn affine<T: Scalar>(x: &Matrix<T>, w: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    debug_assert_eq!(x.cols, w.rows);
    let mut out = Matrix::zeros(x.rows, w.cols);
    for r in 0..x.rows {
        let xr = x.row(r);
        let or = out.row_mut(r);
        or.copy_from_slice(b.as_slice());
        for (k, &xv) in xr.iter().enumerate() {
            if xv == T::zero() {
                continue;
            }
            for (o, &wv) in or.iter_mut().zip(w.row(k)) {
                *o += xv * wv;
            }
        }
    }
    out
}

/// Accumulates `dw += xᵀ·dy`, `db += Σ_rows dy` and returns `dx = dy·wᵀ`.
pub(crate) fn affine_backward<T: Scalar>(
    x: &Matrix<T>,
    w: &Matrix<T>,
    dy: &Matrix<T>,
    dw: &mut Matrix<T>,
    db: &mut Matrix<T>,
) -> Matrix<T> {
    let mut dx = Matrix::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let dyr = dy.row(r);
        for (d, &g) in db.as_mut_slice().iter_mut().zip(dyr) {
            *d += g;
        }
        for (k, &xv) in x.row(r).iter().enumerate() {
            let wk = w.row(k);
            let mut acc = T::zero();
            for (&g, &wv) in dyr.iter().zip(wk) {
                acc += g * wv;
            }
            dx.set(r, k, acc);
            for (dwv, &g) in dw.row_mut(k).iter_mut().zip(dyr) {
                *dwv += xv * g;
            }
        }
    }
    dx
}

/// Multiplies element-wise by a dropout scale mask, if any.
pub(crate) fn apply_mask<T: Scalar>(x: &mut Matrix<T>, mask: &Option<Vec<T>>) {
    if let Some(m) = mask {
        for (v, &s) in x.as_mut_slice().iter_mut().zip(m) {
            *v *= s;
        }
    }
}

const GELU_C: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub(crate) fn gelu<T: Scalar>(x: T) -> T {
    let k = T::lit((2.0 / std::f64::consts::PI).sqrt());
    let half = T::lit(0.5);
    half * x * (T::one() + (k * (x + T::lit(GELU_C) * x * x * x)).tanh())
}

pub(crate) fn gelu_grad<T: Scalar>(x: T) -> T {
    let k = T::lit((2.0 / std::f64::consts::PI).sqrt());
    let half = T::lit(0.5);
    let t = (k * (x + T::lit(GELU_C) * x * x * x)).tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * k * (T::one() + T::lit(3.0 * GELU_C) * x * x)
}
