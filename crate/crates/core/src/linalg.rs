//! Small dense linear-algebra helpers shared by the numerical modules.
//!
//! Complex Hermitian matrices are mapped to real symmetric matrices of twice
//! the dimension through
//!
//! ```text
//! M = A + jB   ->   [[A, -B],
//!                    [B,  A]]
//! ```
//!
//! which preserves positive semidefiniteness and doubles every eigenvalue's
//! multiplicity. The pairing `<X, embed(M)>` for a real symmetric `X`
//! equals `Re tr(Z M)` with `Z = 2 * unembed(X)`, which is how dual
//! variables of embedded cone constraints are mapped back to Hermitian form.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::{CMat, CVec};

/// `u v^H`.
pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

/// `tr(A B)` without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// `u^H M u`, real part.
pub fn quad_form(m: &CMat, u: &CVec) -> f64 {
    (u.adjoint() * m * u)[(0, 0)].re
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; column `k` of the returned matrix pairs with value `k`.
pub fn hermitian_eig_desc(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn lambda_max(m: &CMat) -> f64 {
    hermitian_eig_desc(m).0[0]
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn lambda_min(m: &CMat) -> f64 {
    *hermitian_eig_desc(m).0.last().expect("non-empty matrix")
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn lambda_min_real(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Number of eigenvalues strictly above `threshold`.
pub fn numerical_rank(m: &CMat, threshold: f64) -> usize {
    hermitian_eig_desc(m).0.iter().filter(|&&v| v > threshold).count()
}

/// Real symmetric embedding of a Hermitian matrix (dimension doubles).
pub fn embed_hermitian(m: &CMat) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Inverse of [`embed_hermitian`], averaging the duplicated blocks so that
/// a slightly non-structured input maps to the nearest Hermitian matrix.
pub fn unembed_hermitian(x: &DMatrix<f64>) -> CMat {
    let n2 = x.nrows();
    assert_eq!(n2 % 2, 0, "embedded matrix must have even dimension");
    let n = n2 / 2;
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (x[(i, j)] + x[(i + n, j + n)]);
        let im = 0.5 * (x[(i + n, j)] - x[(i, j + n)]);
        Complex64::new(re, im)
    })
}

/// Frobenius norm of a complex matrix.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Rotates `v` so that `h^H v` is real and nonnegative.
pub fn align_phase(v: &CVec, h: &CVec) -> CVec {
    let ip = h.dotc(v);
    if ip.norm() == 0.0 {
        return v.clone();
    }
    v * (ip.conj() / ip.norm())
}
