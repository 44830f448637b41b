//! Small dense vectors and matrices for parameters of dimension at most
//! [`MAX_DIM`]. Storage is inline so the recursion never allocates.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::ser::{Serialize, SerializeSeq, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

/// Largest supported parameter dimension.
pub const MAX_DIM: usize = 8;

/// Relative pivot size below which a matrix is treated as singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-14;

/// Condition-number estimate above which an inverse is flagged.
pub const ILL_CONDITIONED_ABOVE: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot:e} against scale {scale:e})")]
    Singular { pivot: f64, scale: f64 },
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Parameter-space vector (θ, θ̂_t, a perturbation u, an error Δ_t).
#[derive(Clone, Copy, PartialEq)]
pub struct ParamVec<T> {
    data: [T; MAX_DIM],
    dim: usize,
}

impl<T: Scalar> ParamVec<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Self {
            data: [T::zero(); MAX_DIM],
            dim,
        }
    }

    pub fn from_slice(values: &[T]) -> Self {
        let mut v = Self::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    /// One-dimensional vector.
    pub fn scalar(value: T) -> Self {
        Self::from_slice(&[value])
    }

    /// Unit vector along coordinate `axis`.
    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[axis] = T::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data[..self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.as_slice().iter()
    }

    /// First coordinate; the natural accessor for one-dimensional models.
    pub fn first(&self) -> T {
        self.data[0]
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim, other.dim);
        self.iter()
            .zip(other.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn norm_inf(&self) -> T {
        self.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn scale(&self, k: T) -> Self {
        self.map(|v| v * k)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let mut out = *self;
        for v in &mut out.data[..self.dim] {
            *v = f(*v);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn to_f64(&self) -> ParamVec<f64> {
        let mut out = ParamVec::<f64>::zeros(self.dim);
        for (o, v) in out.data.iter_mut().zip(self.iter()) {
            *o = v.as_f64();
        }
        out
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.as_slice().to_vec()
    }
}

impl<T: Scalar> Index<usize> for ParamVec<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.as_slice()[i]
    }
}

impl<T: Scalar> IndexMut<usize> for ParamVec<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        let dim = self.dim;
        &mut self.data[..dim][i]
    }
}

impl<T: Scalar> Add for ParamVec<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for i in 0..self.dim {
            out.data[i] = self.data[i] + rhs.data[i];
        }
        out
    }
}

impl<T: Scalar> Sub for ParamVec<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for i in 0..self.dim {
            out.data[i] = self.data[i] - rhs.data[i];
        }
        out
    }
}

impl<T: fmt::Debug> fmt::Debug for ParamVec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.data[..self.dim]).finish()
    }
}

impl<T: Scalar> Serialize for ParamVec<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.dim))?;
        for v in self.iter() {
            seq.serialize_element(&v.as_f64())?;
        }
        seq.end()
    }
}

/// Square matrix stored row-major in a fixed `MAX_DIM × MAX_DIM` block.
#[derive(Clone, Copy, PartialEq)]
pub struct SquareMatrix<T> {
    data: [[T; MAX_DIM]; MAX_DIM],
    dim: usize,
}

impl<T: Scalar> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Self {
            data: [[T::zero(); MAX_DIM]; MAX_DIM],
            dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![T::one(); dim])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i][i] = d;
        }
        m
    }

    /// 1×1 matrix.
    pub fn scalar(value: T) -> Self {
        Self::from_diag(&[value])
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(LinalgError::BadDimension(dim));
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            m.data[i][..dim].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(i < self.dim && j < self.dim);
        self.data[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i < self.dim && j < self.dim);
        self.data[i][j] = v;
    }

    /// The (0, 0) entry, i.e. the value of a 1×1 matrix.
    pub fn first(&self) -> T {
        self.data[0][0]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.dim)
            .map(|i| self.data[i][..self.dim].to_vec())
            .collect()
    }

    /// True only when the matrix equals its transpose exactly.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.data[i][j] == self.data[j][i]))
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[j][i] = self.data[i][j];
            }
        }
        out
    }

    pub fn scale(&self, k: T) -> Self {
        let mut out = *self;
        for row in out.data[..self.dim].iter_mut() {
            for v in row[..self.dim].iter_mut() {
                *v = *v * k;
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + self.data[i][i])
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.dim)
            .map(|i| {
                self.data[i][..self.dim]
                    .iter()
                    .fold(T::zero(), |acc, v| acc + v.abs())
            })
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        (0..self.dim)
            .flat_map(|i| self.data[i][..self.dim].iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| self.data[i][..self.dim].iter().all(|v| v.is_finite()))
    }

    pub fn mul_vec(&self, v: &ParamVec<T>) -> ParamVec<T> {
        assert_eq!(self.dim, v.dim());
        let mut out = ParamVec::zeros(self.dim);
        for i in 0..self.dim {
            out[i] = (0..self.dim).fold(T::zero(), |acc, j| acc + self.data[i][j] * v[j]);
        }
        out
    }

    /// Quadratic form `(A u, u)`.
    pub fn quad_form(&self, u: &ParamVec<T>) -> T {
        self.mul_vec(u).dot(u)
    }

    pub fn to_f64(&self) -> SquareMatrix<f64> {
        let mut out = SquareMatrix::<f64>::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] = self.data[i][j].as_f64();
            }
        }
        out
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    ///
    /// A pivot whose magnitude is at most [`SINGULAR_PIVOT_TOL`] times the
    /// largest entry of `self` is treated as zero.
    pub fn invert(&self) -> Result<Inverse<T>, LinalgError> {
        let n = self.dim;
        let scale = self.max_abs();
        let tol = T::lit(SINGULAR_PIVOT_TOL) * scale;
        if scale == T::zero() || !scale.is_finite() {
            return Err(LinalgError::Singular {
                pivot: 0.0,
                scale: scale.as_f64(),
            });
        }
        let mut a = *self;
        let mut inv = Self::identity(n);
        for col in 0..n {
            let (piv_row, piv_abs) =
                (col..n)
                    .map(|r| (r, a.data[r][col].abs()))
                    .fold(
                        (col, -T::one()),
                        |best, cand| {
                            if cand.1 > best.1 {
                                cand
                            } else {
                                best
                            }
                        },
                    );
            if piv_abs <= tol {
                return Err(LinalgError::Singular {
                    pivot: piv_abs.as_f64(),
                    scale: scale.as_f64(),
                });
            }
            a.data.swap(col, piv_row);
            inv.data.swap(col, piv_row);
            let p = a.data[col][col];
            for j in 0..n {
                a.data[col][j] = a.data[col][j] / p;
                inv.data[col][j] = inv.data[col][j] / p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.data[r][col];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    a.data[r][j] = a.data[r][j] - f * a.data[col][j];
                    inv.data[r][j] = inv.data[r][j] - f * inv.data[col][j];
                }
            }
        }
        let condition = self.norm_inf() * inv.norm_inf();
        Ok(Inverse {
            matrix: inv,
            condition_estimate: condition.as_f64(),
        })
    }

    /// Determinant by elimination with partial pivoting.
    pub fn determinant(&self) -> T {
        let n = self.dim;
        let mut a = *self;
        let mut det = T::one();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&r, &s| {
                    a.data[r][col]
                        .abs()
                        .partial_cmp(&a.data[s][col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a.data[piv][col] == T::zero() {
                return T::zero();
            }
            if piv != col {
                a.data.swap(col, piv);
                det = -det;
            }
            let p = a.data[col][col];
            det = det * p;
            for r in col + 1..n {
                let f = a.data[r][col] / p;
                for j in col..n {
                    a.data[r][j] = a.data[r][j] - f * a.data[col][j];
                }
            }
        }
        det
    }

    /// Principal submatrix on the rows and columns whose bits are set in
    /// `mask`, which must select at least one index.
    pub fn principal_submatrix(&self, mask: u32) -> Self {
        let idx: Vec<usize> = (0..self.dim).filter(|i| mask & (1 << i) != 0).collect();
        let mut out = Self::zeros(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.data[a][b] = self.data[i][j];
            }
        }
        out
    }
}

impl<T: Scalar> Add for SquareMatrix<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.data[i][j] = self.data[i][j] + rhs.data[i][j];
            }
        }
        out
    }
}

impl<T: Scalar> Sub for SquareMatrix<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-T::one())
    }
}

impl<T: Scalar> Mul for SquareMatrix<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[i][j] =
                    (0..n).fold(T::zero(), |acc, k| acc + self.data[i][k] * rhs.data[k][j]);
            }
        }
        out
    }
}

impl<T: fmt::Debug> fmt::Debug for SquareMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.data[..self.dim].iter().map(|r| &r[..self.dim]))
            .finish()
    }
}

impl<T: Scalar> Serialize for SquareMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(Scalar::as_f64).collect())
            .collect();
        rows.serialize(s)
    }
}

/// Result of [`SquareMatrix::invert`].
#[derive(Debug, Clone, Copy)]
pub struct Inverse<T> {
    pub matrix: SquareMatrix<T>,
    /// `‖A‖_∞ · ‖A⁻¹‖_∞`.
    pub condition_estimate: f64,
}

impl<T: Scalar> Inverse<T> {
    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_estimate > ILL_CONDITIONED_ABOVE
    }
}
