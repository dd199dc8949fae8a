//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

pub fn inf_norm<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// Max absolute entry of a matrix.
pub fn max_abs<T: Real>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

pub fn is_symmetric<T: Real>(m: &DMatrix<T>, rel_tol: T) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = T::one().max(max_abs(m));
    let asym = max_abs(&(m - m.transpose()));
    asym <= rel_tol * scale
}

/// Positive semidefinite up to `-rel_tol * ‖M‖` on the smallest eigenvalue.
pub fn is_psd<T: Real>(m: &DMatrix<T>, rel_tol: T) -> bool {
    if m.nrows() == 0 {
        return true;
    }
    let sym = (m + m.transpose()) * T::lit(0.5);
    let scale = T::one().max(max_abs(&sym));
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.iter().all(|&l| l >= -rel_tol * scale)
}

pub fn is_positive_definite<T: Real>(m: &DMatrix<T>) -> bool {
    is_symmetric(m, T::attainable(1e-12)) && m.clone().cholesky().is_some()
}

/// Spectral radius via the complex eigenvalues of a real square matrix.
pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    m.complex_eigenvalues()
        .iter()
        .fold(T::zero(), |acc, l| acc.max((l.re * l.re + l.im * l.im).sqrt()))
}

/// Block-diagonal matrix with `count` copies of `block`.
pub fn block_diag_repeat<T: Real>(block: &DMatrix<T>, count: usize) -> DMatrix<T> {
    let (r, c) = block.shape();
    let mut out = DMatrix::zeros(r * count, c * count);
    for i in 0..count {
        out.view_mut((i * r, i * c), (r, c)).copy_from(block);
    }
    out
}

/// Orthonormal basis of the right nullspace of `m` (columns), via SVD of the
/// zero-padded square matrix so that the full set of right singular vectors
/// is available.
pub fn nullspace<T: Real>(m: &DMatrix<T>, rel_tol: T) -> DMatrix<T> {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), m.shape()).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sigma_max = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    let cutoff = rel_tol * T::one().max(sigma_max);
    let null_idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    let mut basis = DMatrix::zeros(cols, null_idx.len());
    for (j, &i) in null_idx.iter().enumerate() {
        basis.set_column(j, &v_t.row(i).transpose());
    }
    basis
}
