//! Noise channel models and their compilation to transfer matrices.
//!
//! A [`NoiseModel`] is a declarative description of an error channel. It is
//! validated and compiled to a [`Ptm`] before use; compilation never
//! renormalizes user input, so an inconsistent declaration is an error
//! rather than a silently adjusted channel.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{ginibre, ComplexMatrix};
use crate::liouville::{kraus_completeness_defect, ptm_from_kraus, qubit_count, Ptm};
use crate::pauli::{pauli_dim, PauliString};

/// Tolerance for probability normalization checks.
const PROB_TOL: f64 = 1e-12;
/// Completeness tolerance for raw Kraus sets.
const KRAUS_TP_TOL: f64 = 1e-6;
/// Most negative admissible Choi eigenvalue for raw Kraus sets.
const CHOI_TOL: f64 = -1e-8;

/// Parameters of the two-qubit crosstalk toy channel.
///
/// The channel applies, with the listed weights, the identity, a bit flip
/// on qubit 0, a bit flip on qubit 1 (two blocks gated by the `eps1` and
/// `eps2` switches), and a correlated `Z (x) Z` phase kick with weight
/// `p_corr`. Trace preservation requires the enabled weights together with
/// `p_corr` to sum to one. A normalization stated over the switched blocks
/// alone, leaving the correlated weight out, would not give a
/// trace-preserving map, so the constraint here always includes `p_corr`.
/// It is checked to within `1e-12` and never renormalized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyCrosstalkParams {
    /// Enables the first weight block `(p01, p11, p21)`.
    pub eps1: bool,
    /// Enables the second weight block `(p02, p12, p22)`.
    pub eps2: bool,
    /// First block: identity weight.
    pub p01: f64,
    /// First block: flip on qubit 0.
    pub p11: f64,
    /// First block: flip on qubit 1.
    pub p21: f64,
    /// Second block: identity weight.
    pub p02: f64,
    /// Second block: flip on qubit 1.
    pub p12: f64,
    /// Second block: flip on qubit 0.
    pub p22: f64,
    /// Correlated `Z (x) Z` weight.
    pub p_corr: f64,
}

impl ToyCrosstalkParams {
    /// Collapses the blocks into per-Pauli-string weights
    /// `(identity, X on qubit 0, X on qubit 1, Z (x) Z)`.
    pub fn pauli_weights(&self) -> [f64; 4] {
        let e1 = if self.eps1 { 1.0 } else { 0.0 };
        let e2 = if self.eps2 { 1.0 } else { 0.0 };
        [
            e1 * self.p01 + e2 * self.p02,
            e1 * self.p11 + e2 * self.p22,
            e1 * self.p21 + e2 * self.p12,
            self.p_corr,
        ]
    }
}

/// Declarative error channel description.
#[derive(Clone, Debug)]
pub enum NoiseModel {
    /// The identity channel.
    Ideal { n: usize },
    /// Depolarizing channel `rho -> p rho + (1 - p) I / 2^n`.
    Depolarizing { n: usize, p: f64 },
    /// Probabilistic Pauli channel `rho -> sum_P q_P P rho P`.
    PauliChannel {
        n: usize,
        probs: Vec<(PauliString, f64)>,
    },
    /// The two-qubit crosstalk toy channel.
    ToyCrosstalk(ToyCrosstalkParams),
    /// Arbitrary channel given by explicit Kraus operators; must be CPTP.
    RawKraus { operators: Vec<ComplexMatrix> },
}

impl NoiseModel {
    /// Convenience constructor for a Pauli channel, validating up front.
    pub fn pauli_channel(n: usize, probs: Vec<(PauliString, f64)>) -> Result<NoiseModel> {
        let model = NoiseModel::PauliChannel { n, probs };
        model.validate()?;
        Ok(model)
    }

    /// Number of qubits the channel acts on.
    pub fn n_qubits(&self) -> Result<usize> {
        match self {
            NoiseModel::Ideal { n } | NoiseModel::Depolarizing { n, .. } => Ok(*n),
            NoiseModel::PauliChannel { n, .. } => Ok(*n),
            NoiseModel::ToyCrosstalk(_) => Ok(2),
            NoiseModel::RawKraus { operators } => {
                let first = operators.first().ok_or(Error::EmptyKraus)?;
                qubit_count(first.nrows())
            }
        }
    }

    /// Checks the declaration without building the transfer matrix.
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Ideal { .. } => Ok(()),
            NoiseModel::Depolarizing { p, .. } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::ParameterOutOfRange {
                        name: "p",
                        value: *p,
                        range: "[0, 1]",
                    });
                }
                Ok(())
            }
            NoiseModel::PauliChannel { n, probs } => {
                let mut sum = 0.0;
                for (pauli, q) in probs {
                    if pauli.n_qubits() != *n {
                        return Err(Error::QubitCountMismatch {
                            na: *n,
                            nb: pauli.n_qubits(),
                        });
                    }
                    if *q < -PROB_TOL {
                        return Err(Error::InvalidProbabilities { defect: -*q });
                    }
                    sum += q;
                }
                if (sum - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidProbabilities {
                        defect: (sum - 1.0).abs(),
                    });
                }
                Ok(())
            }
            NoiseModel::ToyCrosstalk(params) => {
                for (name, value) in [
                    ("p01", params.p01),
                    ("p11", params.p11),
                    ("p21", params.p21),
                    ("p02", params.p02),
                    ("p12", params.p12),
                    ("p22", params.p22),
                    ("p_corr", params.p_corr),
                ] {
                    if !(0.0..=1.0).contains(&value) {
                        return Err(Error::ParameterOutOfRange {
                            name,
                            value,
                            range: "[0, 1]",
                        });
                    }
                }
                let total: f64 = params.pauli_weights().iter().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidProbabilities {
                        defect: (total - 1.0).abs(),
                    });
                }
                Ok(())
            }
            NoiseModel::RawKraus { operators } => {
                let defect = kraus_completeness_defect(operators)?;
                if defect > KRAUS_TP_TOL {
                    return Err(Error::NotTracePreserving { defect });
                }
                let ptm = ptm_from_kraus(operators)?;
                let min_eig = ptm.min_choi_eigenvalue();
                if min_eig < CHOI_TOL {
                    return Err(Error::NotCompletelyPositive {
                        min_eigenvalue: min_eig,
                    });
                }
                Ok(())
            }
        }
    }

    /// Validates and compiles the channel to its transfer matrix.
    pub fn compile(&self) -> Result<Ptm> {
        self.validate()?;
        match self {
            NoiseModel::Ideal { n } => Ok(Ptm::identity(*n)),
            NoiseModel::Depolarizing { n, p } => {
                let mut diag = vec![*p; pauli_dim(*n)];
                diag[0] = 1.0;
                Ptm::from_diagonal(*n, &diag)
            }
            NoiseModel::PauliChannel { n, probs } => pauli_channel_ptm(*n, probs),
            NoiseModel::ToyCrosstalk(params) => {
                let w = params.pauli_weights();
                let probs = vec![
                    (PauliString::from_letters("II")?, w[0]),
                    (PauliString::from_letters("XI")?, w[1]),
                    (PauliString::from_letters("IX")?, w[2]),
                    (PauliString::from_letters("ZZ")?, w[3]),
                ];
                pauli_channel_ptm(2, &probs)
            }
            NoiseModel::RawKraus { operators } => ptm_from_kraus(operators),
        }
    }
}

/// Diagonal transfer matrix of a Pauli channel. Entry `i` is
/// `sum_P q_P (-1)^{<P, P_i>}` with the symplectic (anti)commutation
/// pairing, evaluated without building any matrices.
fn pauli_channel_ptm(n: usize, probs: &[(PauliString, f64)]) -> Result<Ptm> {
    let dim = pauli_dim(n);
    let mut diag = vec![0.0; dim];
    for (i, entry) in diag.iter_mut().enumerate() {
        let target = PauliString::new(n, i)?;
        let mut value = 0.0;
        for (pauli, q) in probs {
            if pauli.anticommutes_with(&target) {
                value -= q;
            } else {
                value += q;
            }
        }
        *entry = value;
    }
    Ptm::from_diagonal(n, &diag)
}

/// Transfer matrix of the product channel `a (x) b`, with `a` acting on the
/// lower-indexed qubits. In the base-4 Pauli indexing the `a` digits are the
/// fast ones, so the product matrix is `kron(R_b, R_a)`.
pub fn tensor(a: &NoiseModel, b: &NoiseModel) -> Result<Ptm> {
    let ra = a.compile()?;
    let rb = b.compile()?;
    let n = ra.n_qubits() + rb.n_qubits();
    Ptm::new(n, rb.mat.kronecker(&ra.mat))
}

/// State preparation and measurement error channels.
///
/// The preparation channel acts once on the initial state; the measurement
/// channel is absorbed into every measured operator through the adjoint
/// action.
#[derive(Clone, Debug)]
pub struct SpamModel {
    pub prep: NoiseModel,
    pub meas: NoiseModel,
}

impl SpamModel {
    pub fn ideal(n: usize) -> Self {
        Self {
            prep: NoiseModel::Ideal { n },
            meas: NoiseModel::Ideal { n },
        }
    }

    /// Compiles to `(prep, meas)` transfer matrices.
    pub fn compile(&self) -> Result<(Ptm, Ptm)> {
        Ok((self.prep.compile()?, self.meas.compile()?))
    }
}

/// Draws a random CPTP channel with `k` Kraus operators: Ginibre matrices
/// are normalized jointly so the completeness sum is exactly the identity.
pub fn random_cptp_kraus<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let d = 1usize << n;
    let gs: Vec<ComplexMatrix> = (0..k.max(1)).map(|_| ginibre(d, d, rng)).collect();
    let mut s = ComplexMatrix::zeros(d, d);
    for g in &gs {
        s += g.adjoint() * g;
    }
    let inv_sqrt = hermitian_inv_sqrt(&s);
    gs.into_iter().map(|g| g * &inv_sqrt).collect()
}

/// Inverse principal square root of a positive definite Hermitian matrix.
fn hermitian_inv_sqrt(a: &ComplexMatrix) -> ComplexMatrix {
    let eig = a.clone().symmetric_eigen();
    let d = eig.eigenvalues.len();
    let mut diag = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        diag[(i, i)] = crate::linalg::c(1.0 / eig.eigenvalues[i].sqrt(), 0.0);
    }
    &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
}
