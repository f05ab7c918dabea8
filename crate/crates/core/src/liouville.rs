//! Operators and channels in the normalized Pauli (Liouville) representation.
//!
//! # Overview
//!
//! A Hermitian operator `M` on `n` qubits is expanded in the orthonormal
//! basis `s_j = P_j / sqrt(2^n)`, where `P_j` ranges over the `4^n` Pauli
//! strings of [`crate::pauli::PauliString`]. The coefficient vector
//! `v[j] = tr(s_j M)` is real, and the HS inner product of two operators is
//! the Euclidean dot product of their vectors.
//!
//! A linear map `L` becomes the real `4^n x 4^n` transfer matrix
//! `R[i][j] = tr(s_i L(s_j))`. Composition of maps is matrix multiplication,
//! trace preservation shows up as a first row `(1, 0, ..., 0)`, unitary
//! conjugation gives a real orthogonal matrix, and outcome probabilities are
//! inner products `tr(E rho) = <e, v>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, check_square, hermitian_eigenvalues, ComplexMatrix};
use crate::pauli::{hilbert_dim, pauli_dim, PauliString};

/// Real coefficient vector of a Hermitian operator in the normalized Pauli
/// basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleVector {
    n: usize,
    pub coeffs: DVector<f64>,
}

impl LiouvilleVector {
    pub fn new(n: usize, coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.len() != pauli_dim(n) {
            return Err(Error::DimensionMismatch {
                expected: pauli_dim(n),
                rows: coeffs.len(),
                cols: 1,
            });
        }
        Ok(Self { n, coeffs })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: DVector::zeros(pauli_dim(n)),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Vector of the computational basis state `|bits><bits|`, where
    /// `bits[q]` is the outcome on qubit `q`.
    pub fn computational_state(bits: &[bool]) -> Self {
        let n = bits.len();
        let mut coeffs = DVector::zeros(pauli_dim(n));
        let scale = 1.0 / (hilbert_dim(n) as f64).sqrt();
        for j in 0..pauli_dim(n) {
            let p = PauliString::new(n, j).expect("index in range");
            // tr(P |bits><bits|) is nonzero only for strings of I and Z
            // letters; each Z on a qubit in state |1> contributes -1.
            let mut val = 1.0;
            let mut diagonal = true;
            for (q, &bit) in bits.iter().enumerate() {
                match p.letter(q) {
                    0 => {}
                    3 => {
                        if bit {
                            val = -val;
                        }
                    }
                    _ => {
                        diagonal = false;
                        break;
                    }
                }
            }
            if diagonal {
                coeffs[j] = val * scale;
            }
        }
        Self { n, coeffs }
    }
}

/// Expands a Hermitian matrix in the normalized Pauli basis.
///
/// The imaginary parts of the projections are discarded; they vanish for
/// Hermitian input, which is the only case the rest of the crate uses.
pub fn vectorize(rho: &ComplexMatrix) -> Result<LiouvilleVector> {
    let n = qubit_count(rho.nrows())?;
    check_square(rho, hilbert_dim(n))?;
    let dim = pauli_dim(n);
    let mut coeffs = DVector::zeros(dim);
    for j in 0..dim {
        let p = PauliString::new(n, j).expect("index in range");
        let m = p.normalized_matrix();
        let tr: Complex64 = (m * rho).trace();
        coeffs[j] = tr.re;
    }
    LiouvilleVector::new(n, coeffs)
}

/// Reassembles the matrix from its coefficient vector.
pub fn devectorize(v: &LiouvilleVector) -> ComplexMatrix {
    let n = v.n_qubits();
    let d = hilbert_dim(n);
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..pauli_dim(n) {
        if v.coeffs[j] != 0.0 {
            let p = PauliString::new(n, j).expect("index in range");
            m += p.normalized_matrix() * c(v.coeffs[j], 0.0);
        }
    }
    m
}

/// Inner product `tr(E rho)` of two vectorized Hermitian operators.
pub fn expectation(e: &LiouvilleVector, rho: &LiouvilleVector) -> f64 {
    e.coeffs.dot(&rho.coeffs)
}

/// Real transfer matrix of a linear map in the normalized Pauli basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Ptm {
    n: usize,
    pub mat: DMatrix<f64>,
}

impl Ptm {
    pub fn new(n: usize, mat: DMatrix<f64>) -> Result<Self> {
        let dim = pauli_dim(n);
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        Ok(Self { n, mat })
    }

    /// Transfer matrix of the identity map.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            mat: DMatrix::identity(pauli_dim(n), pauli_dim(n)),
        }
    }

    /// Diagonal transfer matrix from its diagonal entries.
    pub fn from_diagonal(n: usize, diag: &[f64]) -> Result<Self> {
        if diag.len() != pauli_dim(n) {
            return Err(Error::DimensionMismatch {
                expected: pauli_dim(n),
                rows: diag.len(),
                cols: 1,
            });
        }
        Ok(Self {
            n,
            mat: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        pauli_dim(self.n)
    }

    /// Applies the map to a vectorized operator.
    pub fn apply(&self, v: &LiouvilleVector) -> LiouvilleVector {
        LiouvilleVector {
            n: self.n,
            coeffs: &self.mat * &v.coeffs,
        }
    }

    /// Applies the adjoint map, used to absorb measurement noise into a
    /// measured operator.
    pub fn apply_adjoint(&self, v: &LiouvilleVector) -> LiouvilleVector {
        LiouvilleVector {
            n: self.n,
            coeffs: self.mat.transpose() * &v.coeffs,
        }
    }

    /// Deviation of the first row from `(1, 0, ..., 0)`; zero exactly when
    /// the map preserves the trace.
    pub fn trace_preservation_defect(&self) -> f64 {
        let mut defect: f64 = (self.mat[(0, 0)] - 1.0).abs();
        for j in 1..self.dim() {
            defect = defect.max(self.mat[(0, j)].abs());
        }
        defect
    }

    /// Choi matrix of the map; its smallest eigenvalue is nonnegative
    /// exactly for completely positive maps. Normalized so the trace equals
    /// `2^n` for trace-preserving maps.
    pub fn choi(&self) -> ComplexMatrix {
        let dim = self.dim();
        let d = hilbert_dim(self.n);
        let mut j_mat = ComplexMatrix::zeros(d * d, d * d);
        let basis: Vec<ComplexMatrix> = (0..dim)
            .map(|i| {
                PauliString::new(self.n, i)
                    .expect("index in range")
                    .normalized_matrix()
            })
            .collect();
        for i in 0..dim {
            for k in 0..dim {
                let coeff = self.mat[(k, i)];
                if coeff != 0.0 {
                    let term = basis[k].kronecker(&basis[i].transpose());
                    j_mat += term * c(coeff, 0.0);
                }
            }
        }
        j_mat
    }

    /// Smallest eigenvalue of the Choi matrix.
    pub fn min_choi_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.choi())
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Composition `a . b` of two maps, applying `b` first.
pub fn compose(a: &Ptm, b: &Ptm) -> Ptm {
    debug_assert_eq!(a.n, b.n);
    Ptm {
        n: a.n,
        mat: &a.mat * &b.mat,
    }
}

/// Transfer matrix of the channel with the given Kraus operators.
///
/// Completeness of the Kraus set is the caller's contract; it is enforced
/// where channels are admitted into a noise model, not here, so that the
/// same routine can express general (e.g. unnormalized unitary) conjugation
/// maps.
pub fn ptm_from_kraus(kraus: &[ComplexMatrix]) -> Result<Ptm> {
    let first = kraus.first().ok_or(Error::EmptyKraus)?;
    let n = qubit_count(first.nrows())?;
    let d = hilbert_dim(n);
    for k in kraus {
        check_square(k, d)?;
    }
    let dim = pauli_dim(n);
    let basis: Vec<ComplexMatrix> = (0..dim)
        .map(|i| {
            PauliString::new(n, i)
                .expect("index in range")
                .normalized_matrix()
        })
        .collect();
    let mut mat = DMatrix::zeros(dim, dim);
    for k in kraus {
        let kd = k.adjoint();
        for j in 0..dim {
            let image = k * &basis[j] * &kd;
            for i in 0..dim {
                let tr: Complex64 = (&basis[i] * &image).trace();
                mat[(i, j)] += tr.re;
            }
        }
    }
    Ptm::new(n, mat)
}

/// Transfer matrix of conjugation by a unitary.
pub fn ptm_from_unitary(u: &ComplexMatrix) -> Result<Ptm> {
    ptm_from_kraus(std::slice::from_ref(u))
}

/// Largest deviation of `sum_k K_k^dag K_k` from the identity.
pub fn kraus_completeness_defect(kraus: &[ComplexMatrix]) -> Result<f64> {
    let first = kraus.first().ok_or(Error::EmptyKraus)?;
    let d = first.nrows();
    let mut acc = ComplexMatrix::zeros(d, d);
    for k in kraus {
        check_square(k, d)?;
        acc += k.adjoint() * k;
    }
    Ok(crate::linalg::max_abs_diff(
        &acc,
        &ComplexMatrix::identity(d, d),
    ))
}

/// Number of qubits for a Hilbert space dimension, or an error when the
/// dimension is not a power of two.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo { dim });
    }
    Ok(dim.trailing_zeros() as usize)
}
