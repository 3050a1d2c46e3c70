//! F-Label stacks and model feature matrices.
//!
//! A stack holds `K` label-embedding slices of shape `N×L`, one per
//! foundation model. The solvers see the stack through three views that
//! all share the same row-major vectorization: the weighted combination
//! `Zt`, the inner products `⟨Z_k, M⟩_F`, and the `K×K` Gram matrix. Those
//! are exactly `flatten_for_t(Z)·t`, `flatten_for_t(Z)ᵀ vec(M)` and
//! `flatten_for_t(Z)ᵀ flatten_for_t(Z)`.

use thiserror::Error;

use crate::linalg::Matrix;
use crate::simplex::SimplexVector;

/// Rows with a smaller ℓ2 norm cannot be normalized.
pub const ZERO_ROW_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelError {
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error("slice {index} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("no label slices given")]
    Empty,
    #[error("label id {id} out of range for {classes} classes")]
    OutOfRange { id: usize, classes: usize },
}

/// Features `X ∈ R^{N×D}` extracted by one candidate model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Matrix);

impl FeatureMatrix {
    pub fn new(matrix: Matrix) -> Self {
        Self(matrix)
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn d(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Appends a constant-one feature (opt-in intercept).
    pub fn with_intercept(&self) -> Self {
        Self(self.0.with_ones_column())
    }
}

impl From<Matrix> for FeatureMatrix {
    fn from(m: Matrix) -> Self {
        Self(m)
    }
}

/// `K` label-embedding slices of identical shape `N×L`.
#[derive(Debug, Clone, PartialEq)]
pub struct FLabelStack {
    n: usize,
    l: usize,
    slices: Vec<Matrix>,
}

impl FLabelStack {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn k(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, k: usize) -> &Matrix {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[Matrix] {
        &self.slices
    }

    /// `Zt = Σ_k t_k Z_k`, an `N×L` matrix.
    pub fn combine(&self, t: &[f64]) -> Matrix {
        debug_assert_eq!(t.len(), self.k());
        let mut out = vec![0.0; self.n * self.l];
        for (slice, &weight) in self.slices.iter().zip(t) {
            if weight == 0.0 {
                continue;
            }
            for (o, z) in out.iter_mut().zip(slice.as_slice()) {
                *o += weight * z;
            }
        }
        Matrix::from_parts(self.n, self.l, out)
    }

    /// `⟨Z_k, m⟩_F` for every slice.
    pub fn inner_products(&self, m: &Matrix) -> Vec<f64> {
        debug_assert_eq!(m.shape(), (self.n, self.l));
        self.slices
            .iter()
            .map(|s| {
                s.as_slice()
                    .iter()
                    .zip(m.as_slice())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `K×K` Gram matrix of the slices under the Frobenius inner product.
    pub fn gram(&self) -> Matrix {
        let k = self.k();
        let mut g = Matrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v: f64 = self.slices[i]
                    .as_slice()
                    .iter()
                    .zip(self.slices[j].as_slice())
                    .map(|(a, b)| a * b)
                    .sum();
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }
}

/// Divides every row by its ℓ2 norm.
pub fn normalize_flabels(raw: &Matrix) -> Result<Matrix, LabelError> {
    let mut data = Vec::with_capacity(raw.rows() * raw.cols());
    for r in 0..raw.rows() {
        let row = raw.row(r);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < ZERO_ROW_NORM {
            return Err(LabelError::ZeroRow(r));
        }
        data.extend(row.iter().map(|v| v / norm));
    }
    Ok(Matrix::from_parts(raw.rows(), raw.cols(), data))
}

/// Stacks slices in input order; all must share the first slice's shape.
pub fn stack_flabels(slices: Vec<Matrix>) -> Result<FLabelStack, LabelError> {
    let first = slices.first().ok_or(LabelError::Empty)?;
    let expected = first.shape();
    for (index, s) in slices.iter().enumerate().skip(1) {
        if s.shape() != expected {
            return Err(LabelError::ShapeMismatch {
                index,
                expected,
                found: s.shape(),
            });
        }
    }
    Ok(FLabelStack {
        n: expected.0,
        l: expected.1,
        slices,
    })
}

/// `(N·L)×K` matrix whose column `k` is the row-major vectorization of
/// slice `k`: entry `(n·L + l, k)` is `Z_k[n, l]`.
pub fn flatten_for_t(stack: &FLabelStack) -> Matrix {
    let rows = stack.n * stack.l;
    let k = stack.k();
    let mut data = vec![0.0; rows * k];
    for (j, slice) in stack.slices.iter().enumerate() {
        for (i, &v) in slice.as_slice().iter().enumerate() {
            data[i * k + j] = v;
        }
    }
    Matrix::from_parts(rows, k, data)
}

/// Single-slice stack of one-hot rows, `L = classes`.
pub fn one_hot_stack(labels: &[usize], classes: usize) -> Result<FLabelStack, LabelError> {
    let mut data = vec![0.0; labels.len() * classes];
    for (n, &id) in labels.iter().enumerate() {
        if id >= classes {
            return Err(LabelError::OutOfRange { id, classes });
        }
        data[n * classes + id] = 1.0;
    }
    stack_flabels(vec![Matrix::from_parts(labels.len(), classes, data)])
}

/// Residual `Xw − Zt` as an `N×L` matrix; shapes are checked by the caller.
pub(crate) fn residual(xw: &Matrix, stack: &FLabelStack, t: &SimplexVector) -> Matrix {
    let mut r = xw.clone();
    r.axpy(-1.0, &stack.combine(t.as_slice()))
        .expect("residual operands share the N×L shape");
    r
}
