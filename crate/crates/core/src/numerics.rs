//! Minimal dense linear algebra and numerically stable elementwise functions.
//!
//! Everything here is pure and immutable after construction, so values can
//! be shared freely across threads.

use crate::real::Real;
use std::ops::{Index, IndexMut};

/// Dense vector of real scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector<F>(Vec<F>);

impl<F: Real> Vector<F> {
    pub fn new(elements: Vec<F>) -> Self {
        Vector(elements)
    }

    pub fn zeros(len: usize) -> Self {
        Vector(vec![F::zero(); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, F> {
        self.0.iter()
    }

    pub fn to_vec(&self) -> Vec<F> {
        self.0.clone()
    }

    pub fn map(&self, mut f: impl FnMut(F) -> F) -> Self {
        Vector(self.0.iter().map(|&x| f(x)).collect())
    }

    /// Coordinatewise sum of two equal-length vectors.
    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    /// Coordinatewise difference.
    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// Coordinatewise (Hadamard) product.
    pub fn hadamard(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: F) -> Self {
        self.map(|x| x * s)
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -x)
    }

    pub fn dot(&self, other: &Self) -> F {
        assert_eq!(
            self.len(),
            other.len(),
            "dot: length mismatch {} vs {}",
            self.len(),
            other.len()
        );
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn sum(&self) -> F {
        self.0.iter().copied().sum()
    }

    /// Largest absolute entry; zero for the empty vector.
    pub fn max_abs(&self) -> F {
        self.0
            .iter()
            .map(|x| x.abs())
            .fold(F::zero(), |a, b| a.max(b))
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.len(), other.len());
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, s: F) {
        for a in self.0.iter_mut() {
            *a *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(F, F) -> F) -> Self {
        assert_eq!(
            self.len(),
            other.len(),
            "vector op: length mismatch {} vs {}",
            self.len(),
            other.len()
        );
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}

impl<F: Real> Index<usize> for Vector<F> {
    type Output = F;
    fn index(&self, i: usize) -> &F {
        &self.0[i]
    }
}

impl<F: Real> IndexMut<usize> for Vector<F> {
    fn index_mut(&mut self, i: usize) -> &mut F {
        &mut self.0[i]
    }
}

impl<F: Real> FromIterator<F> for Vector<F> {
    fn from_iter<T: IntoIterator<Item = F>>(iter: T) -> Self {
        Vector(iter.into_iter().collect())
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in &rows {
            assert_eq!(row.len(), n_cols, "from_rows: ragged row");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: n_rows,
            cols: n_cols,
            data,
        }
    }

    /// Builds from a flat row-major buffer; entry count must equal rows*cols.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "from_row_major: {}x{} needs {} entries, got {}",
            rows,
            cols,
            rows * cols,
            data.len()
        );
        Matrix { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = F::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Standard matrix-vector product.
    ///
    /// A dimension mismatch is a caller bug and aborts with both shapes in
    /// the message.
    pub fn matvec(&self, v: &Vector<F>) -> Vector<F> {
        assert_eq!(
            self.cols,
            v.len(),
            "matvec: matrix {}x{} applied to vector of length {}",
            self.rows,
            self.cols,
            v.len()
        );
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.iter())
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Product with the transpose: `self^T * v`.
    pub fn matvec_t(&self, v: &Vector<F>) -> Vector<F> {
        assert_eq!(
            self.rows,
            v.len(),
            "matvec_t: matrix {}x{} transposed applied to vector of length {}",
            self.rows,
            self.cols,
            v.len()
        );
        let mut out = Vector::zeros(self.cols);
        for i in 0..self.rows {
            let vi = v[i];
            for (j, &m) in self.row(i).iter().enumerate() {
                out[j] += m * vi;
            }
        }
        out
    }

    /// Rank-1 accumulation `self += u * v^T` (used for weight gradients).
    pub fn add_outer(&mut self, u: &Vector<F>, v: &Vector<F>) {
        assert_eq!(self.rows, u.len());
        assert_eq!(self.cols, v.len());
        for i in 0..self.rows {
            let ui = u[i];
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            for (j, m) in row.iter_mut().enumerate() {
                *m += ui * v[j];
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale_assign(&mut self, s: F) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn map(&self, mut f: impl FnMut(F) -> F) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<F: Real> Index<(usize, usize)> for Matrix<F> {
    type Output = F;
    fn index(&self, (i, j): (usize, usize)) -> &F {
        &self.data[i * self.cols + j]
    }
}

impl<F: Real> IndexMut<(usize, usize)> for Matrix<F> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut F {
        &mut self.data[i * self.cols + j]
    }
}

/// Gate nonlinearities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Nonlinearity {
    Sigmoid,
    Tanh,
}

impl Nonlinearity {
    pub fn apply_scalar<F: Real>(self, x: F) -> F {
        match self {
            Nonlinearity::Sigmoid => sigmoid(x),
            Nonlinearity::Tanh => x.tanh(),
        }
    }

    pub fn apply<F: Real>(self, v: &Vector<F>) -> Vector<F> {
        v.map(|x| self.apply_scalar(x))
    }
}

/// Logistic function, computed without overflowing `exp` for large |x|.
pub fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Applies sigmoid or tanh per coordinate.
pub fn elementwise<F: Real>(f: Nonlinearity, v: &Vector<F>) -> Vector<F> {
    f.apply(v)
}

/// Softmax with max-subtraction so large logits cannot overflow.
///
/// Output entries are positive and sum to one; adding a constant to every
/// logit leaves the result unchanged.
pub fn stable_softmax<F: Real>(logits: &Vector<F>) -> Vector<F> {
    assert!(!logits.is_empty(), "stable_softmax: empty logits");
    let max = logits
        .iter()
        .fold(F::neg_infinity(), |a, &b| if b > a { b } else { a });
    let exps: Vector<F> = logits.iter().map(|&x| (x - max).exp()).collect();
    let total = exps.sum();
    exps.scale(F::one() / total)
}
