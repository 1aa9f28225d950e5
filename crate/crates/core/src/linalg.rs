//! Symmetric PSD helpers: eigendecomposition pseudo-inverses, quadratic
//! forms, span tests and PSD checks.
//!
//! Pseudo-inverses follow one policy everywhere: eigenvalues below
//! `1e-10 · λ_max` are treated as zero, and quadratic forms are taken on the
//! surviving range space.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// Relative eigenvalue cutoff for pseudo-inversion.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Relative tolerance for deciding whether a vector lies in the range space.
pub const SPAN_TOL: f64 = 1e-7;

/// Eigendecomposition-backed pseudo-inverse of a symmetric PSD matrix.
#[derive(Debug, Clone)]
pub struct PsdSolver {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
    inv_values: DVector<f64>,
    rank: usize,
}

impl PsdSolver {
    pub fn new(m: &DMatrix<f64>) -> Self {
        // Symmetrise first; callers accumulate with rank-one updates that are
        // symmetric only up to roundoff.
        let sym = (m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let cutoff = PINV_CUTOFF * lambda_max;
        let mut inv = DVector::zeros(eig.eigenvalues.len());
        let mut rank = 0;
        for (i, &v) in eig.eigenvalues.iter().enumerate() {
            if v > cutoff && v > 0.0 {
                inv[i] = 1.0 / v;
                rank += 1;
            }
        }
        PsdSolver { vectors: eig.eigenvectors, values: eig.eigenvalues, inv_values: inv, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `xᵀ M⁺ x`; null-space components of `x` contribute nothing.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let proj = self.vectors.transpose() * x;
        proj.iter().zip(self.inv_values.iter()).map(|(c, iv)| c * c * iv).sum()
    }

    /// `M⁺ v`.
    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut proj = self.vectors.transpose() * v;
        for i in 0..proj.len() {
            proj[i] *= self.inv_values[i];
        }
        &self.vectors * proj
    }

    /// Dense `M⁺`.
    pub fn pinv(&self) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for j in 0..scaled.ncols() {
            let iv = self.inv_values[j];
            for i in 0..scaled.nrows() {
                scaled[(i, j)] *= iv;
            }
        }
        &scaled * self.vectors.transpose()
    }

    /// Squared norm of the component of `x` outside the range space.
    pub fn out_of_span_norm_sq(&self, x: &DVector<f64>) -> f64 {
        let proj = self.vectors.transpose() * x;
        let mut out = 0.0;
        for i in 0..proj.len() {
            if self.inv_values[i] == 0.0 {
                out += proj[i] * proj[i];
            }
        }
        out
    }

    /// Whether `x` lies in the range space up to [`SPAN_TOL`] relative error.
    pub fn in_span(&self, x: &DVector<f64>) -> bool {
        let n2 = x.norm_squared();
        n2 == 0.0 || self.out_of_span_norm_sq(x) <= SPAN_TOL * SPAN_TOL * n2
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Checks `A ⪰ B` up to an absolute slack on the smallest eigenvalue.
pub fn is_psd_dominant(a: &DMatrix<f64>, b: &DMatrix<f64>, slack: f64) -> bool {
    min_eigenvalue(&(a - b)) >= -slack
}

/// An orthonormal basis of the span of a set of vectors, as columns.
///
/// Returns the basis `Q` (d × r); coordinates in the reduced space are `Qᵀ x`.
pub fn span_basis(vectors: &[DVector<f64>]) -> DMatrix<f64> {
    assert!(!vectors.is_empty());
    let d = vectors[0].len();
    let mut gram = DMatrix::zeros(d, d);
    for v in vectors {
        gram.ger(1.0, v, v, 1.0);
    }
    let eig = gram.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = (PINV_CUTOFF * lambda_max).max(f64::MIN_POSITIVE);
    let keep: Vec<usize> =
        (0..d).filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    let mut q = DMatrix::zeros(d, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        q.set_column(col, &eig.eigenvectors.column(i));
    }
    q
}
