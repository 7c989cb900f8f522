//! Dense linear-algebra helpers: complex pseudoinverses, kernel bases,
//! projector construction and validation.

use crate::{Error, Result, PINV_CUT};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn to_faer(m: &CMat) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// `PINV_CUT * sigma_max` are treated as exact zeros; the operators we invert
/// (differences of projectors) are structurally rank-deficient.
pub fn pinv(m: &CMat) -> CMat {
    let svd = to_faer(m).svd().expect("svd convergence");
    let s = svd.S();
    let k = s.dim();
    let smax = (0..k).map(|i| s[i].re).fold(0.0f64, f64::max);
    let cut = (PINV_CUT * smax).max(1e-14);
    let u = svd.U();
    let v = svd.V();
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for idx in 0..k {
        let sv = s[idx].re;
        if sv > cut {
            for i in 0..m.ncols() {
                for j in 0..m.nrows() {
                    let term = v[(i, idx)] * u[(j, idx)].conj() / sv;
                    out[(i, j)] += Complex64::new(term.re, term.im);
                }
            }
        }
    }
    out
}

/// Orthonormal basis of the kernel of `m` (columns), via the full SVD.
pub fn kernel_basis(m: &CMat) -> CMat {
    let n = m.ncols();
    let svd = to_faer(m).svd().expect("svd convergence");
    let s = svd.S();
    let k = s.dim();
    let smax = (0..k).map(|i| s[i].re).fold(0.0f64, f64::max);
    let cut = (PINV_CUT * smax).max(1e-14);
    let v = svd.V();
    let mut cols: Vec<CVec> = Vec::new();
    for idx in 0..n {
        let keep = idx >= k || s[idx].re <= cut;
        if keep {
            let mut z = CVec::zeros(n);
            for i in 0..n {
                z[i] = Complex64::new(v[(i, idx)].re, v[(i, idx)].im);
            }
            cols.push(z);
        }
    }
    from_columns(n, &cols)
}

/// Singular values of a complex matrix, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let svd = to_faer(m).svd().expect("svd convergence");
    let s = svd.S();
    (0..s.dim()).map(|i| s[i].re).collect()
}

/// Operator norm (largest singular value) of a real matrix.
pub fn op_norm_real(m: &DMatrix<f64>) -> f64 {
    let fm = faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let svd = fm.svd().expect("svd convergence");
    let s = svd.S();
    (0..s.dim()).map(|i| s[i]).fold(0.0f64, f64::max)
}

/// Assemble a matrix from column vectors (empty set gives an n x 0 matrix).
pub fn from_columns(nrows: usize, cols: &[CVec]) -> CMat {
    let mut m = CMat::zeros(nrows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        m.set_column(j, col);
    }
    m
}

/// Projector onto the column span of an orthonormal basis matrix.
pub fn projector_from_basis(basis: &CMat) -> CMat {
    if basis.ncols() == 0 {
        return CMat::zeros(basis.nrows(), basis.nrows());
    }
    basis * basis.adjoint()
}

/// Check Hermitian idempotence of a claimed projector.
pub fn check_projector(p: &CMat, tol: f64, label: &str) -> Result<()> {
    let herm = (p - p.adjoint()).norm();
    let idem = (p * p - p).norm();
    if herm > tol || idem > tol {
        return Err(Error::numerical(format!(
            "{label}: not a projector (hermiticity {herm:.2e}, idempotence {idem:.2e})"
        )));
    }
    Ok(())
}

/// Check unitarity of `u`.
pub fn check_unitary(u: &CMat, tol: f64, label: &str) -> Result<()> {
    let n = u.nrows();
    let dev = (u.adjoint() * u - CMat::identity(n, n)).norm();
    if dev > tol {
        return Err(Error::numerical(format!(
            "{label}: not unitary (deviation {dev:.2e})"
        )));
    }
    Ok(())
}

/// Identity matrix of the same square size as `m`.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real inner-product-free norm of the difference, convenience.
pub fn dist(a: &CVec, b: &CVec) -> f64 {
    (a - b).norm()
}
