//! Small dense helpers shared by every module: sorted symmetric eigensystems,
//! PSD square roots and trace inner products.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigenpairs of a symmetric matrix sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vector,
    /// Columns are unit eigenvectors matching `values`.
    pub vectors: Matrix,
}

impl SortedEigen {
    pub fn new(sym: &Matrix) -> Self {
        let n = sym.nrows();
        let symmetrized = (sym + sym.transpose()) * 0.5;
        let eig = SymmetricEigen::new(symmetrized);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[i]
                .partial_cmp(&eig.eigenvalues[j])
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(i.cmp(&j))
        });
        let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = Matrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sum of the `count` smallest eigenvalues.
    pub fn sum_smallest(&self, count: usize) -> f64 {
        self.values.iter().take(count).sum()
    }

    /// Rebuild `Q f(Λ) Qᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let scaled = Matrix::from_fn(self.vectors.nrows(), self.vectors.ncols(), |r, c| {
            self.vectors[(r, c)] * f(self.values[c])
        });
        &scaled * self.vectors.transpose()
    }
}

/// PSD square root with eigenvalues clamped at zero first.
pub fn psd_sqrt(sym: &Matrix) -> Matrix {
    SortedEigen::new(sym).map(|v| libm::sqrt(v.max(0.0)))
}

/// Frobenius inner product `⟨A, B⟩ = Tr(AᵀB)`.
pub fn frob_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `⟨UUᵀ, M⟩` as `Σ_j u_jᵀ M u_j`.
pub fn projected_trace(u: &Matrix, m: &Matrix) -> f64 {
    let mu = m * u;
    frob_inner(u, &mu)
}

pub fn is_symmetric(m: &Matrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

/// Deviation of a column-orthonormal matrix from `UᵀU = I` in Frobenius norm.
pub fn orthonormality_residual(u: &Matrix) -> f64 {
    let p = u.ncols();
    (u.transpose() * u - Matrix::identity(p, p)).norm()
}

/// Flip each eigenvector so its largest-magnitude entry is positive.
pub fn fix_column_signs(m: &mut Matrix) {
    for mut col in m.column_iter_mut() {
        let mut best = 0.0_f64;
        let mut sign = 1.0;
        for &x in col.iter() {
            if libm::fabs(x) > best + 1e-12 {
                best = libm::fabs(x);
                sign = if x < 0.0 { -1.0 } else { 1.0 };
            }
        }
        col *= sign;
    }
}
