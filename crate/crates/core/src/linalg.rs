//! Dense row-major matrices and the normal-equations least-squares kernel.
//!
//! Every solver step in the crate reduces to a handful of operations on
//! small-to-medium dense matrices: products, Gram matrices, and a Cholesky
//! solve of `AᵀA + λI`. Products go through `matrixmultiply`'s blocked GEMM;
//! the factorization is hand-written because the normal matrix is reused
//! across alternating iterations.

use std::fmt;

use thiserror::Error;

/// Relative pivot threshold below which an unregularized normal system is
/// reported as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Number of power-iteration steps used by [`spectral_norm_upper_bound`].
pub const POWER_ITERATIONS: usize = 100;

/// Relative safety margin added to the power-iteration estimate (a factor of 1.01).
pub const SPECTRAL_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("data length {len} does not match shape {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("normal matrix is numerically singular (pivot {index} = {pivot:e})")]
    RankDeficient { index: usize, pivot: f64 },
    #[error("negative ridge {0}")]
    NegativeRidge(f64),
    #[error("ragged rows: row {row} has {len} entries, expected {expected}")]
    Ragged {
        row: usize,
        len: usize,
        expected: usize,
    },
}

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(6) {
            if r > 0 {
                write!(f, "; ")?;
            }
            let row = self.row(r);
            for (c, v) in row.iter().take(6).enumerate() {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            if self.cols > 6 {
                write!(f, ", ...")?;
            }
        }
        if self.rows > 6 {
            write!(f, "; ...")?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from external data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Widens single-precision input.
    pub fn from_f32(rows: usize, cols: usize, data: &[f32]) -> Result<Self, LinalgError> {
        Self::new(rows, cols, data.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Ragged {
                    row: i,
                    len: r.len(),
                    expected: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    /// Internal constructor for data produced by arithmetic on valid matrices.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, vec![0.0; rows * cols])
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self::from_parts(rows, cols, vec![value; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Single column matrix.
    pub fn column(values: Vec<f64>) -> Self {
        let n = values.len();
        Self::from_parts(n, 1, values)
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub(crate) fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column_vec(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix::from_parts(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// Appends a constant column of ones.
    pub fn with_ones_column(&self) -> Matrix {
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.push(1.0);
        }
        Matrix::from_parts(self.rows, cols, data)
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Entry-wise `self - other`.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_same_shape("sub", other)?;
        Ok(Matrix::from_parts(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        ))
    }

    /// Entry-wise `self + other`.
    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_same_shape("add", other)?;
        Ok(Matrix::from_parts(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        ))
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Matrix) -> Result<(), LinalgError> {
        self.check_same_shape("axpy", other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &Matrix) -> Result<f64, LinalgError> {
        self.check_same_shape("dot", other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    fn check_same_shape(&self, op: &'static str, other: &Matrix) -> Result<(), LinalgError> {
        if self.shape() != other.shape() {
            return Err(LinalgError::ShapeMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch {
                op: "matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(
            self.rows,
            self.cols,
            other.cols,
            (&self.data, self.cols as isize, 1),
            (&other.data, other.cols as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::ShapeMismatch {
                op: "t_matmul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        gemm(
            self.cols,
            self.rows,
            other.cols,
            (&self.data, 1, self.cols as isize),
            (&other.data, other.cols as isize, 1),
            &mut out.data,
        );
        Ok(out)
    }

    /// Gram matrix `selfᵀ · self`, symmetrized.
    pub fn gram(&self) -> Matrix {
        let mut g = self
            .t_matmul(self)
            .expect("gram of a matrix with itself is always conformable");
        let n = g.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (g.data[i * n + j] + g.data[j * n + i]);
                g.data[i * n + j] = v;
                g.data[j * n + i] = v;
            }
        }
        g
    }

    /// `self · v` for a plain vector.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · v` for a plain vector.
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `c = a · b` with `a` m×k and `b` k×n given as (data, row stride, col stride).
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: (&[f64], isize, isize),
    b: (&[f64], isize, isize),
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    // SAFETY: the strides describe row- or column-major views that lie
    // entirely within the borrowed slices (checked by the callers' shape
    // tests), and `c` is an exclusive m×n row-major buffer.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.0.as_ptr(),
            a.1,
            a.2,
            b.0.as_ptr(),
            b.1,
            b.2,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Cholesky factor `L` of a symmetric positive definite matrix, `G = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors `g`. Fails with [`LinalgError::RankDeficient`] when a pivot
    /// falls below `PIVOT_TOLERANCE` times the largest diagonal entry.
    pub fn factor(g: &Matrix) -> Result<Self, LinalgError> {
        Self::factor_with(g, PIVOT_TOLERANCE)
    }

    /// Factors a matrix known to be positive definite (e.g. regularized),
    /// only rejecting non-positive pivots.
    pub fn factor_regularized(g: &Matrix) -> Result<Self, LinalgError> {
        Self::factor_with(g, 0.0)
    }

    fn factor_with(g: &Matrix, relative_tolerance: f64) -> Result<Self, LinalgError> {
        if g.rows != g.cols {
            return Err(LinalgError::ShapeMismatch {
                op: "cholesky",
                left: g.shape(),
                right: g.shape(),
            });
        }
        let n = g.rows;
        let largest = (0..n).map(|i| g.get(i, i)).fold(0.0_f64, f64::max);
        let threshold = relative_tolerance * largest;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let (done, rest) = l.split_at_mut((j + 1) * n);
            let row_j = &mut done[j * n..];
            let pivot = g.get(j, j) - row_j[..j].iter().map(|v| v * v).sum::<f64>();
            if !(pivot > threshold && pivot > 0.0) {
                return Err(LinalgError::RankDeficient { index: j, pivot });
            }
            let diag = pivot.sqrt();
            row_j[j] = diag;
            let row_j = &row_j[..j];
            for (i, row_i) in rest.chunks_exact_mut(n).enumerate() {
                let s: f64 = row_i[..j].iter().zip(row_j).map(|(a, b)| a * b).sum();
                row_i[j] = (g.get(i + j + 1, j) - s) / diag;
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `G X = B` for a right-hand side with `n` rows.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        if rhs.rows != self.n {
            return Err(LinalgError::ShapeMismatch {
                op: "cholesky_solve",
                left: (self.n, self.n),
                right: rhs.shape(),
            });
        }
        let n = self.n;
        let m = rhs.cols;
        let mut x = rhs.data.clone();
        // Forward: L y = b, rows of x are contiguous right-hand sides.
        for i in 0..n {
            let (done, rest) = x.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for j in 0..i {
                let lij = self.lower[i * n + j];
                if lij != 0.0 {
                    let xj = &done[j * m..(j + 1) * m];
                    for (a, b) in xi.iter_mut().zip(xj) {
                        *a -= lij * b;
                    }
                }
            }
            let d = self.lower[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        // Backward: Lᵀ x = y.
        for i in (0..n).rev() {
            let (head, rest) = x.split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            for j in (i + 1)..n {
                let lji = self.lower[j * n + i];
                if lji != 0.0 {
                    let xj = &rest[(j - i - 1) * m..(j - i) * m];
                    for (a, b) in xi.iter_mut().zip(xj) {
                        *a -= lji * b;
                    }
                }
            }
            let d = self.lower[i * n + i];
            xi.iter_mut().for_each(|v| *v /= d);
        }
        Ok(Matrix::from_parts(n, m, x))
    }
}

/// Factored normal equations `(AᵀA + ridge·I) W = Aᵀ B` for a fixed design
/// matrix `A`, reusable across many right-hand sides.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    factor: Cholesky,
    ridge: f64,
}

impl NormalEquations {
    pub fn new(a: &Matrix, ridge: f64) -> Result<Self, LinalgError> {
        Self::from_gram(a.gram(), ridge)
    }

    /// Factors from a precomputed Gram matrix `AᵀA`.
    pub fn from_gram(mut gram: Matrix, ridge: f64) -> Result<Self, LinalgError> {
        if ridge.is_nan() || ridge < 0.0 {
            return Err(LinalgError::NegativeRidge(ridge));
        }
        let factor = if ridge > 0.0 {
            let n = gram.rows;
            for i in 0..n {
                gram.data[i * n + i] += ridge;
            }
            Cholesky::factor_regularized(&gram)?
        } else {
            Cholesky::factor(&gram)?
        };
        Ok(Self { factor, ridge })
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Solves for `W` given the projected right-hand side `AᵀB`.
    pub fn solve_projected(&self, atb: &Matrix) -> Result<Matrix, LinalgError> {
        self.factor.solve(atb)
    }

    /// Solves for `W` given the design matrix and the raw right-hand side.
    pub fn solve(&self, a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
        self.factor.solve(&a.t_matmul(b)?)
    }
}

/// Minimizes `‖aW − b‖_F² + ridge·‖W‖_F²` through the normal equations.
pub fn least_squares(a: &Matrix, b: &Matrix, ridge: f64) -> Result<Matrix, LinalgError> {
    if a.rows != b.rows {
        return Err(LinalgError::ShapeMismatch {
            op: "least_squares",
            left: a.shape(),
            right: b.shape(),
        });
    }
    NormalEquations::new(a, ridge)?.solve(a, b)
}

/// The ridge used inside the solvers when none is configured:
/// `1e-10 · trace(G) / dim` for a Gram matrix `G`.
pub fn default_ridge(gram: &Matrix) -> f64 {
    let n = gram.rows.max(1);
    1e-10 * gram.trace() / n as f64
}

/// Upper bound on the spectral norm `‖a‖₂` from power iteration on `aᵀa`,
/// inflated by [`SPECTRAL_MARGIN`]. Zero for a zero matrix.
pub fn spectral_norm_upper_bound(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let n = a.cols;
    // Deterministic start with no special alignment to coordinate axes.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.37 * ((i * 7 + 3) % 11) as f64 / 11.0)
        .collect();
    normalize(&mut v);
    let mut estimate = 0.0_f64;
    for _ in 0..POWER_ITERATIONS {
        let av = a.matvec(&v);
        let mut w = a.t_matvec(&av);
        // ‖a v‖² = vᵀ aᵀa v is the Rayleigh quotient of aᵀa.
        let rayleigh: f64 = av.iter().map(|x| x * x).sum();
        estimate = estimate.max(rayleigh);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            break;
        }
        v = w;
    }
    let norm = estimate.sqrt();
    norm + norm * SPECTRAL_MARGIN
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}
