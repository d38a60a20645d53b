//! Dense real matrix primitives.
//!
//! Thin validated wrapper around `nalgebra`'s dynamic matrices plus the
//! numerical contracts the rest of the crate relies on: symmetric
//! eigendecomposition with a deterministic sign convention, Cholesky
//! factorization with eigenvalue-clipping repair for nearly-PSD inputs,
//! and the symmetric PSD square root.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance used when checking that an input matrix is symmetric.
const SYMMETRY_TOL: f64 = 1e-10;

/// A dense real matrix with finite entries and positive dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    inner: DMatrix<f64>,
}

impl Matrix {
    /// Build from row-major entries.
    pub fn from_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {bad}")));
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(rows, cols, entries),
        })
    }

    /// Diagonal matrix from the given diagonal entries.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Dimension("empty diagonal".into()));
        }
        if let Some(bad) = diag.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("diagonal entry {bad}")));
        }
        Ok(Self {
            inner: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(diag)),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub(crate) fn from_inner(inner: DMatrix<f64>) -> Self {
        Self { inner }
    }

    pub(crate) fn inner(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_inner(self.inner.transpose())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols() != other.rows() {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Matrix::from_inner(&self.inner * &other.inner))
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::Dimension(format!(
                "cannot subtract {}x{} from {}x{}",
                other.rows(),
                other.cols(),
                self.rows(),
                self.cols()
            )));
        }
        Ok(Matrix::from_inner(&self.inner - &other.inner))
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix::from_inner(&self.inner * c)
    }

    pub fn trace(&self) -> f64 {
        self.inner.diagonal().sum()
    }

    /// tr(self * other), evaluated without forming the product.
    pub fn trace_product(&self, other: &Matrix) -> Result<f64> {
        if self.cols() != other.rows() || self.rows() != other.cols() {
            return Err(Error::Dimension("trace_product shape mismatch".into()));
        }
        let mut acc = 0.0;
        for i in 0..self.rows() {
            for k in 0..self.cols() {
                acc += self.inner[(i, k)] * other.inner[(k, i)];
            }
        }
        Ok(acc)
    }

    /// Sum of squared diagonal entries, i.e. tr(self ∘ self) for the
    /// Hadamard product of the matrix with itself.
    pub fn diag_square_sum(&self) -> f64 {
        self.inner.diagonal().iter().map(|d| d * d).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.rows() {
            for j in (i + 1)..self.cols() {
                worst = worst.max((self.inner[(i, j)] - self.inner[(j, i)]).abs());
            }
        }
        worst
    }

    fn check_symmetric(&self, context: &str) -> Result<()> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "{context}: expected square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let scale = self.max_abs().max(1.0);
        if self.max_asymmetry() > SYMMETRY_TOL * scale {
            return Err(Error::Domain(format!(
                "{context}: matrix is not symmetric within tolerance {SYMMETRY_TOL}"
            )));
        }
        Ok(())
    }

    /// (M + Mᵀ)/2.
    fn symmetrized(&self) -> DMatrix<f64> {
        (&self.inner + self.inner.transpose()) * 0.5
    }
}

/// Spectral decomposition of a symmetric matrix.
///
/// Eigenvalues are sorted in descending order; `vectors` holds the matching
/// orthonormal eigenvectors as columns. Each column is normalized so that its
/// first nonzero coordinate is positive, which makes downstream eigenvector
/// functionals deterministic across runs.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input must be square with finite entries and symmetric to tolerance
/// `1e-10`; it is symmetrized as (M + Mᵀ)/2 before decomposing.
pub fn sym_eigen(m: &Matrix) -> Result<SymEigen> {
    m.check_symmetric("sym_eigen")?;
    let sym = m.symmetrized();
    let p = sym.nrows();
    let eig = nalgebra::SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("eigenvalues are finite")
    });

    let mut values = Vec::with_capacity(p);
    let mut vectors = DMatrix::zeros(p, p);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        let col = eig.eigenvectors.column(src);
        let sign = col
            .iter()
            .find(|v| **v != 0.0)
            .map_or(1.0, |v| if *v < 0.0 { -1.0 } else { 1.0 });
        for i in 0..p {
            vectors[(i, dst)] = col[i] * sign;
        }
    }

    Ok(SymEigen {
        values,
        vectors: Matrix::from_inner(vectors),
    })
}

/// Outcome of a PSD repair performed by [`cholesky_psd`].
#[derive(Debug, Clone, Copy)]
pub struct PsdRepair {
    /// Largest eigenvalue shift applied by the clipping.
    pub eigen_shift: f64,
    /// Spectral norm of the input, for callers that budget the repair.
    pub spectral_norm: f64,
}

/// Lower-triangular Cholesky factor, possibly of a repaired matrix.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub l: Matrix,
    pub repair: Option<PsdRepair>,
}

impl PsdFactor {
    pub fn repaired(&self) -> bool {
        self.repair.is_some()
    }
}

/// Cholesky factorization with eigenvalue-clipping repair.
///
/// Tries a plain factorization first. If that fails (the matrix is
/// indefinite or singular), eigenvalues below `clip_floor` are clipped up to
/// `clip_floor`, the matrix is rebuilt, and the factorization is retried;
/// the returned [`PsdFactor`] records that a repair happened and how large
/// the eigenvalue shift was.
pub fn cholesky_psd(m: &Matrix, clip_floor: f64) -> Result<PsdFactor> {
    m.check_symmetric("cholesky_psd")?;
    if !(clip_floor >= 0.0) {
        return Err(Error::Domain(format!(
            "cholesky_psd: clip_floor must be nonnegative, got {clip_floor}"
        )));
    }
    let sym = m.symmetrized();
    if let Some(l) = try_cholesky(&sym) {
        return Ok(PsdFactor {
            l: Matrix::from_inner(l),
            repair: None,
        });
    }

    let eig = sym_eigen(m)?;
    let p = eig.values.len();
    let mut shift = 0.0_f64;
    let mut clipped = Vec::with_capacity(p);
    for &v in &eig.values {
        if v < clip_floor {
            shift = shift.max(clip_floor - v);
            clipped.push(clip_floor);
        } else {
            clipped.push(v);
        }
    }
    let spectral_norm = eig
        .values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));

    let vmat = eig.vectors.inner();
    let rebuilt = vmat * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&clipped)) * vmat.transpose();
    let rebuilt = (&rebuilt + rebuilt.transpose()) * 0.5;

    let l = try_cholesky(&rebuilt)
        .or_else(|| tolerant_cholesky(&rebuilt))
        .ok_or_else(|| Error::NotPsd {
            min_eigenvalue: eig.values.last().copied().unwrap_or(f64::NAN),
        })?;

    Ok(PsdFactor {
        l: Matrix::from_inner(l),
        repair: Some(PsdRepair {
            eigen_shift: shift,
            spectral_norm,
        }),
    })
}

/// Plain Cholesky; fails on any non-positive pivot.
fn try_cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let p = a.nrows();
    let mut l = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) {
            return None;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Some(l)
}

/// Cholesky for singular PSD matrices: zero pivots produce zero columns.
fn tolerant_cholesky(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let p = a.nrows();
    let scale = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tiny = 1e-14 * scale.max(1.0);
    let mut l = DMatrix::zeros(p, p);
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tiny {
            return None;
        }
        let root = d.max(0.0).sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..p {
            if root <= tiny {
                l[(i, j)] = 0.0;
                continue;
            }
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Some(l)
}

/// Symmetric PSD square root: S with S·S = m.
///
/// Small negative eigenvalues (down to -1e-6) are treated as zero; anything
/// below that is rejected as not positive semidefinite.
pub fn sym_sqrt(m: &Matrix) -> Result<Matrix> {
    let eig = sym_eigen(m)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -1e-6 {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    let roots: Vec<f64> = eig.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let vmat = eig.vectors.inner();
    let s = vmat * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&roots)) * vmat.transpose();
    let s = (&s + s.transpose()) * 0.5;
    Ok(Matrix::from_inner(s))
}

/// An n×p data matrix whose rows are observations.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    data: Matrix,
}

impl SampleMatrix {
    pub fn new(data: Matrix) -> Self {
        Self { data }
    }

    pub fn from_rows(n: usize, p: usize, entries: &[f64]) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(n, p, entries)?))
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.data.rows()
    }

    /// Dimension of each observation.
    pub fn p(&self) -> usize {
        self.data.cols()
    }

    pub fn get(&self, obs: usize, coord: usize) -> f64 {
        self.data.get(obs, coord)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    /// Inner product of observations j and k.
    pub fn dot_rows(&self, j: usize, k: usize) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.p() {
            acc += self.data.get(j, c) * self.data.get(k, c);
        }
        acc
    }

    /// Gram matrix X·Xᵀ of inner products between observations.
    pub fn gram(&self) -> Matrix {
        let x = self.data.inner();
        Matrix::from_inner(x * x.transpose())
    }

    /// Cross-Gram matrix X₁·X₂ᵀ; entry (j,k) is ⟨x_j, y_k⟩.
    pub fn cross_gram(&self, other: &SampleMatrix) -> Result<Matrix> {
        if self.p() != other.p() {
            return Err(Error::Dimension(format!(
                "cross_gram: dimension mismatch p={} vs p={}",
                self.p(),
                other.p()
            )));
        }
        let a = self.data.inner();
        let b = other.data.inner();
        Ok(Matrix::from_inner(a * b.transpose()))
    }

    /// Column means (the sample mean vector).
    pub fn mean(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.p())
            .map(|c| self.data.inner().column(c).sum() / n)
            .collect()
    }
}
