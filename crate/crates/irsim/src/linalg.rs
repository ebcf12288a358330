//! Small Hermitian-matrix utilities used throughout the library.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Returns the Hermitian part (A + A^H)/2, removing rounding asymmetry.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Minimum eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMat) -> f64 {
    let eig = hermitize(a).symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Checks Hermitian-ness (entrywise, `tol`) and numerical PSD-ness
/// (min eigenvalue >= -`eig_tol`).
pub fn check_hermitian_psd(a: &CMat, tol: f64, eig_tol: f64, context: &str) -> Result<()> {
    let diff = a - a.adjoint();
    let asym = diff.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if asym > tol {
        return Err(Error::Numeric {
            context: context.to_string(),
            details: format!("not Hermitian, max |A - A^H| = {asym:e}"),
        });
    }
    let min_eig = min_eigenvalue(a);
    if min_eig < -eig_tol {
        return Err(Error::NotPsd {
            context: context.to_string(),
            min_eig,
        });
    }
    Ok(())
}

/// Hermitian square root via eigendecomposition, clipping negative
/// eigenvalues at zero. The result S satisfies S S^H = A up to the clipped
/// defect.
pub fn hermitian_sqrt(a: &CMat) -> CMat {
    let eig = hermitize(a).symmetric_eigen();
    let n = a.nrows();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let lam = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= Complex64::new(lam, 0.0);
        }
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Real part of tr(A B). For Hermitian A, B the trace is real up to rounding.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    // tr(AB) = sum_ij A_ij B_ji
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = a[(i, j)] * b[(j, i)];
            acc += p.re;
        }
    }
    acc
}

/// Real trace of a (nominally Hermitian) matrix.
pub fn trace_re(a: &CMat) -> f64 {
    a.trace().re
}

/// I ∘ A: the diagonal of A as a diagonal matrix.
pub fn hadamard_identity(a: &CMat) -> CMat {
    let n = a.nrows();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            a[(i, i)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Solves A X = B for Hermitian positive definite A, with an
/// eigendecomposition pseudo-inverse fallback when the Cholesky
/// factorization fails.
pub fn hermitian_solve(a: &CMat, b: &CMat, context: &str) -> Result<CMat> {
    let ah = hermitize(a);
    if let Some(chol) = ah.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    // Fall back to a pseudo-inverse; report the conditioning that forced it.
    let n = ah.nrows();
    let eig = ah.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if max_eig <= 0.0 {
        return Err(Error::Singular {
            context: context.to_string(),
        });
    }
    let cutoff = max_eig * 1e-14;
    log::warn!(
        "{context}: Cholesky failed, using pseudo-inverse (max eig {max_eig:e}, cutoff {cutoff:e})"
    );
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let lam = eig.eigenvalues[j];
        let inv = if lam > cutoff { 1.0 / lam } else { 0.0 };
        for i in 0..n {
            scaled[(i, j)] *= Complex64::new(inv, 0.0);
        }
    }
    Ok(scaled * eig.eigenvectors.adjoint() * b)
}

/// Complex identity matrix.
pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}
