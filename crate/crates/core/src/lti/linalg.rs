//! Dense linear-algebra helpers shared by the synthesis modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetrize(m).symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Positive semidefinite up to a tolerance relative to the largest entry.
pub fn is_psd(m: &DMatrix<f64>, rel_tol: f64) -> bool {
    let scale = m.amax();
    min_symmetric_eigenvalue(m) >= -rel_tol * scale.max(f64::MIN_POSITIVE)
}

pub fn is_pd(m: &DMatrix<f64>) -> bool {
    m.nrows() > 0 && symmetrize(m).cholesky().is_some()
}

/// Symmetric PSD square root via the eigendecomposition.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}

/// Full `n×n` left singular basis of an `n×k` matrix (zero-padded when `k < n`).
pub fn full_left_basis(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let n = m.nrows();
    let padded = if m.ncols() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (n, m.ncols())).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let u = svd.u.expect("requested U");
    let mut out = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().take(n).enumerate() {
        out.set_column(dst, &u.column(src));
    }
    let sv = order.iter().map(|&i| svd.singular_values[i]).collect();
    (out, sv)
}

/// Orthonormal basis of the orthogonal complement of `span(v)`, returned as rows.
pub fn orthogonal_complement_rows(v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = v.nrows();
    let (u, sv) = full_left_basis(v);
    let tol = sv.first().copied().unwrap_or(0.0) * 1e-12 * n as f64;
    let rank = sv.iter().filter(|s| **s > tol).count();
    u.columns(rank, n - rank).transpose()
}

/// Smallest of the `min(rows, cols)` singular values of a complex matrix.
pub fn min_singular_value_complex(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Inverse with an explicit error on (numerical) singularity.
pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(what.to_string()))
}

pub fn infinity_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}
