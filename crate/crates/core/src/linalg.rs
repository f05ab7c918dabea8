//! Dense complex linear algebra helpers shared across the crate.
//!
//! Matrices are row-major [`nalgebra::DMatrix`] values over [`Complex64`].
//! Dimensions stay tiny (at most 16x16 for two-qubit transfer matrices), so
//! everything uses straightforward dense routines.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Dense complex matrix used for operators, states and Kraus terms.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Shorthand for building a complex scalar.
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Kronecker product `a (x) b`, with `a` indexing the slow (leftmost) factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Conjugate transpose.
pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs_entry(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise difference between two complex matrices.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    max_abs_entry(&(a - b))
}

/// Largest entrywise difference between two real matrices.
pub fn max_abs_diff_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Checks that `a` is square with the expected dimension.
pub fn check_square(a: &ComplexMatrix, expected: usize) -> Result<()> {
    if a.nrows() != expected || a.ncols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, unsorted.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> DVector<f64> {
    a.clone().symmetric_eigen().eigenvalues
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues slightly below zero (rounding noise) are clamped to zero.
pub fn hermitian_sqrt(a: &ComplexMatrix) -> ComplexMatrix {
    let eig = a.clone().symmetric_eigen();
    let d = eig.eigenvalues.len();
    let mut sqrt_diag = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        let lambda = eig.eigenvalues[i].max(0.0);
        sqrt_diag[(i, i)] = c(lambda.sqrt(), 0.0);
    }
    &eig.eigenvectors * sqrt_diag * eig.eigenvectors.adjoint()
}

/// Fidelity between two density matrices, `(tr sqrt(sqrt(a) b sqrt(a)))^2`.
pub fn state_fidelity(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    let sa = hermitian_sqrt(a);
    let inner = &sa * b * &sa;
    let root = hermitian_sqrt(&inner);
    let tr: Complex64 = root.trace();
    Ok(tr.re * tr.re)
}

/// One draw from the standard normal distribution (Box-Muller).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Matrix with independent standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(standard_normal(rng), standard_normal(rng))
    })
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix that
/// makes the factorization unique.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random pure state vector.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex64> {
    let mut v = DVector::from_fn(dim, |_, _| c(standard_normal(rng), standard_normal(rng)));
    let norm = v.norm();
    v /= c(norm, 0.0);
    v
}

/// Rank-one density matrix `|v><v|`.
pub fn projector(v: &DVector<Complex64>) -> ComplexMatrix {
    v * v.adjoint()
}
