//! Small dense linear algebra: a row-major matrix, one-sided Jacobi SVD,
//! numerical rank and null spaces.
//!
//! Matrices in this crate are tiny (rigidity matrices of graphs with a dozen
//! nodes, `d x d` Procrustes covariances), so the SVD is the plain Hestenes
//! one-sided Jacobi iteration. It is accurate to working precision for small
//! singular values, which matters more here than speed.

use std::ops::{Index, IndexMut, Mul};

use thiserror::Error;

use crate::scalar::Real;

/// Relative singular-value cutoff used for rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 80;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * v` for a vector of length `cols`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        match self.data.iter().position(|x| !x.is_finite()) {
            Some(k) => Err(LinalgError::NonFinite { row: k / self.cols, col: k % self.cols }),
            None => Ok(()),
        }
    }

    /// Largest entry of `|selfᵀ self - I|`.
    pub fn orthogonality_defect(&self) -> T {
        let gram = &self.transpose() * self;
        let mut worst = T::zero();
        for i in 0..gram.rows {
            for j in 0..gram.cols {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Singular value decomposition `A = U diag(s) Vᵀ`.
///
/// `singular_values` are sorted descending. `v` is the full `cols x cols`
/// orthogonal factor; `u` is `rows x cols` and its columns paired with zero
/// singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub singular_values: Vec<T>,
    pub u: Matrix<T>,
    pub v: Matrix<T>,
}

/// One-sided Jacobi SVD of an arbitrary `m x n` matrix.
pub fn svd<T: Real>(a: &Matrix<T>) -> Result<Svd<T>, LinalgError> {
    a.check_finite()?;
    let (m, n) = (a.rows, a.cols);
    // Column-major working copies: w holds A·V, v accumulates rotations.
    let mut w: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..n).map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect()).collect();
    let eps = T::epsilon();
    let tiny = T::min_positive_value();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if alpha <= tiny || beta <= tiny {
                    continue;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(usize, T)> = w.iter().enumerate().map(|(j, col)| (j, norm(col))).collect();
    order.sort_by(|x, y| y.1.partial_cmp(&x.1).expect("finite singular values").then(x.0.cmp(&y.0)));

    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (k, &(j, sigma)) in order.iter().enumerate() {
        singular_values.push(sigma);
        if sigma > T::zero() {
            for i in 0..m {
                u[(i, k)] = w[j][i] / sigma;
            }
        }
        for i in 0..n {
            vm[(i, k)] = v[j][i];
        }
    }
    Ok(Svd { singular_values, u, v: vm })
}

fn rotate_columns<T: Real>(cols: &mut [Vec<T>], p: usize, q: usize, c: T, s: T) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*xp, *xq);
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

/// Number of singular values strictly above `rel_tol * sigma_max`.
pub fn numerical_rank<T: Real>(a: &Matrix<T>, rel_tol: T) -> Result<usize, LinalgError> {
    let sv = svd(a)?.singular_values;
    Ok(rank_from_singular_values(&sv, rel_tol))
}

pub fn rank_from_singular_values<T: Real>(sv: &[T], rel_tol: T) -> usize {
    let largest = sv.iter().fold(T::zero(), |m, &s| m.max(s));
    if largest == T::zero() {
        return 0;
    }
    let cutoff = rel_tol * largest;
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Orthonormal basis (as matrix columns) of the right null space of `a`:
/// the columns of `V` whose singular values fall at or below the rank cutoff.
pub fn null_space<T: Real>(a: &Matrix<T>, rel_tol: T) -> Result<Matrix<T>, LinalgError> {
    let dec = svd(a)?;
    let rank = rank_from_singular_values(&dec.singular_values, rel_tol);
    let n = a.cols;
    let mut basis = Matrix::zeros(n, n - rank);
    for k in rank..n {
        for i in 0..n {
            basis[(i, k - rank)] = dec.v[(i, k)];
        }
    }
    Ok(basis)
}

/// Basis of `{ w : wᵀ a = 0 }`, returned as columns.
pub fn left_null_space<T: Real>(a: &Matrix<T>, rel_tol: T) -> Result<Matrix<T>, LinalgError> {
    null_space(&a.transpose(), rel_tol)
}

/// Completes the (possibly zero) columns of `u` to an orthonormal basis.
/// Columns with norm below `1/2` are treated as missing and replaced by
/// Gram-Schmidt on the standard basis.
pub fn complete_orthonormal<T: Real>(u: &Matrix<T>) -> Matrix<T> {
    let n = u.rows;
    assert_eq!(u.cols, n, "complete_orthonormal expects a square matrix");
    let half = T::of(0.5);
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for j in 0..n {
        let c = u.column(j);
        if norm(&c) > half {
            cols.push(c);
        } else {
            missing.push(j);
            cols.push(vec![T::zero(); n]);
        }
    }
    let mut candidate = 0;
    for &j in &missing {
        loop {
            let mut e: Vec<T> = (0..n).map(|i| if i == candidate { T::one() } else { T::zero() }).collect();
            candidate += 1;
            for (k, c) in cols.iter().enumerate() {
                if k == j || norm(c) <= half {
                    continue;
                }
                let proj = dot(&e, c);
                for (ei, &ci) in e.iter_mut().zip(c) {
                    *ei = *ei - proj * ci;
                }
            }
            let len = norm(&e);
            if len > half {
                cols[j] = e.into_iter().map(|x| x / len).collect();
                break;
            }
        }
    }
    let mut out = Matrix::zeros(n, n);
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = c[i];
        }
    }
    out
}
