//! Group twirls, invariant subspace decompositions and decay rate algebra.
//!
//! # Overview
//!
//! Averaging the conjugation action of a gate set over a noise channel (the
//! twirl) projects the channel onto the commutant of the group action. For
//! the gate sets here that commutant is spanned by projectors onto invariant
//! subspaces of the Pauli basis: the full one- and two-qubit Clifford
//! groups leave only the identity axis and its complement invariant, while
//! a product of per-qubit Clifford groups splits the basis by Pauli
//! support. The twirled channel is then `sum_j alpha_j P_j`, one decay rate
//! per subspace, and those rates are what benchmarking experiments
//! estimate.
//!
//! Twirling groups that act with multiplicity (a one-qubit group acting on
//! one side of a two-qubit register) do not reduce to projector
//! combinations; their twirl keeps coefficient tables instead, handled by
//! [`experiment2_twirl_coefficients`].

use nalgebra::DMatrix;

use crate::clifford::{GateSetGroup, GroupKind};
use crate::error::{Error, Result};
use crate::liouville::Ptm;
use crate::pauli::{pauli_dim, PauliString};

/// Tolerance for the group-covariance pre-check of a twirled map.
const COVARIANCE_TOL: f64 = 1e-8;
/// Tolerance for the projector reconstruction residual.
const RESIDUAL_TOL: f64 = 1e-8;
/// Slack admitted on the CPTP box when classifying inversion roots.
const ADMIT_TOL: f64 = 1e-9;

/// One invariant subspace of the Pauli basis under a gate set action.
#[derive(Clone, Debug)]
pub struct Subspace {
    /// Conventional name (`"W0"`, `"W1"`, ...).
    pub label: String,
    /// Qubits carrying non-identity letters, for support-split subspaces.
    pub support: Option<Vec<usize>>,
    /// Pauli basis indices spanning the subspace.
    pub members: Vec<usize>,
}

impl Subspace {
    pub fn dim(&self) -> usize {
        self.members.len()
    }
}

/// Invariant subspace decomposition for a gate set group.
#[derive(Clone, Debug)]
pub struct IrrepDecomposition {
    kind: GroupKind,
    n: usize,
    subspaces: Vec<Subspace>,
}

impl IrrepDecomposition {
    /// Builds the decomposition used to analyze twirls over `kind`.
    ///
    /// For the full groups this is the identity axis plus its complement.
    /// For products of per-qubit groups the basis splits by Pauli support;
    /// subspaces are ordered by support size and, within a size, by the
    /// highest-numbered qubit first, which reproduces the conventional
    /// two-qubit numbering `W1` (qubit 1 only), `W2` (qubit 0 only), `W3`
    /// (both). For the one-sided kinds (`C1xI`, `IxC1`) the same projectors
    /// are returned, but they do not span the commutant (the group acts
    /// with multiplicity), so [`projector_decompose`] reports a residual
    /// error for them.
    pub fn for_group(kind: GroupKind) -> Result<IrrepDecomposition> {
        let n = kind.n_qubits();
        let dim = pauli_dim(n);
        let subspaces = match kind {
            GroupKind::C1 | GroupKind::C2 => {
                vec![
                    Subspace {
                        label: "W0".into(),
                        support: None,
                        members: vec![0],
                    },
                    Subspace {
                        label: "W1".into(),
                        support: None,
                        members: (1..dim).collect(),
                    },
                ]
            }
            GroupKind::C1xI | GroupKind::IxC1 | GroupKind::C1xC1 | GroupKind::C1Power(_) => {
                support_split_subspaces(n)
            }
        };
        Ok(IrrepDecomposition { kind, n, subspaces })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    /// Projector onto subspace `j` as a diagonal transfer matrix.
    pub fn projector(&self, j: usize) -> Ptm {
        let dim = pauli_dim(self.n);
        let mut diag = vec![0.0; dim];
        for &i in &self.subspaces[j].members {
            diag[i] = 1.0;
        }
        Ptm::from_diagonal(self.n, &diag).expect("members are in range")
    }
}

/// Subspaces of fixed Pauli support, ordered by support size then by
/// descending support mask.
fn support_split_subspaces(n: usize) -> Vec<Subspace> {
    let mut masks: Vec<usize> = (0..(1usize << n)).collect();
    masks.sort_by_key(|&m| (m.count_ones(), usize::MAX - m));
    masks
        .into_iter()
        .enumerate()
        .map(|(w, mask)| {
            let members: Vec<usize> = (0..pauli_dim(n))
                .filter(|&i| {
                    PauliString::new(n, i)
                        .expect("index in range")
                        .support_mask()
                        == mask
                })
                .collect();
            Subspace {
                label: format!("W{w}"),
                support: Some((0..n).filter(|q| mask & (1 << q) != 0).collect()),
                members,
            }
        })
        .collect()
}

/// Per-subspace decay rates of a twirled channel, aligned with the
/// subspaces of the decomposition they were read from.
#[derive(Clone, Debug)]
pub struct AlphaSet {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
}

impl AlphaSet {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.values[i])
    }
}

/// Averages the conjugation action of every group element over a channel.
pub fn exhaustive_twirl(noise: &Ptm, group: &GateSetGroup) -> Ptm {
    let dim = noise.dim();
    let mut acc = DMatrix::zeros(dim, dim);
    for element in group.elements() {
        acc += element.conjugate_ptm(noise).mat;
    }
    acc /= group.order() as f64;
    Ptm::new(noise.n_qubits(), acc).expect("dimensions are consistent")
}

/// Reads per-subspace decay rates off a twirled transfer matrix.
///
/// Pre-checks that the matrix commutes with the whole group action, then
/// projects onto each subspace via `alpha_j = tr(M P_j) / dim(P_j)` and
/// verifies the reconstruction `sum_j alpha_j P_j` reproduces the matrix.
/// A residual above tolerance means the group acts with multiplicity and
/// the projector picture does not apply.
pub fn projector_decompose(twirled: &Ptm, dec: &IrrepDecomposition) -> Result<AlphaSet> {
    let group = GateSetGroup::generate(dec.kind())?;
    let mut covariance_defect = 0.0f64;
    for element in group.elements() {
        let conj = element.conjugate_ptm(twirled);
        let defect = crate::linalg::max_abs_diff_real(&conj.mat, &twirled.mat);
        covariance_defect = covariance_defect.max(defect);
    }
    if covariance_defect > COVARIANCE_TOL {
        return Err(Error::NotGroupCovariant {
            defect: covariance_defect,
        });
    }

    let mut values = Vec::with_capacity(dec.subspaces().len());
    for sub in dec.subspaces() {
        let trace: f64 = sub.members.iter().map(|&i| twirled.mat[(i, i)]).sum();
        values.push(trace / sub.dim() as f64);
    }

    let dim = twirled.dim();
    let mut recon = DMatrix::zeros(dim, dim);
    for (sub, &alpha) in dec.subspaces().iter().zip(&values) {
        for &i in &sub.members {
            recon[(i, i)] = alpha;
        }
    }
    let residual = crate::linalg::max_abs_diff_real(&twirled.mat, &recon);
    if residual > RESIDUAL_TOL {
        return Err(Error::ProjectorResidual { residual });
    }

    Ok(AlphaSet {
        labels: dec.subspaces().iter().map(|s| s.label.clone()).collect(),
        values,
    })
}

/// Coefficient tables of a twirl over a one-qubit group acting on qubit 1
/// of a two-qubit register (qubit 0 untouched).
///
/// The twirled matrix is block diagonal in the qubit-1 index `j`: the
/// `j = 0` block keeps the full 4x4 table `alpha0[i][k]`, and the three
/// `j != 0` blocks collapse to a single shared table `alpha1[i][k]`, with
/// `i, k` the qubit-0 indices.
#[derive(Clone, Debug)]
pub struct Exp2Coefficients {
    pub alpha0: DMatrix<f64>,
    pub alpha1: DMatrix<f64>,
}

impl Exp2Coefficients {
    /// Reassembles the full twirled transfer matrix from the tables.
    pub fn twirled_ptm(&self) -> Ptm {
        let mut mat = DMatrix::zeros(16, 16);
        for i in 0..4 {
            for k in 0..4 {
                mat[(i, k)] = self.alpha0[(i, k)];
                for j in 1..4 {
                    mat[(i + 4 * j, k + 4 * j)] = self.alpha1[(i, k)];
                }
            }
        }
        Ptm::new(2, mat).expect("dimensions are consistent")
    }
}

/// Computes the coefficient tables of the one-sided twirl directly from the
/// untwirled transfer matrix: `alpha0[i][k] = R[(i,0),(k,0)]` and
/// `alpha1[i][k] = (1/3) sum_{j=1..3} R[(i,j),(k,j)]`.
pub fn experiment2_twirl_coefficients(noise: &Ptm) -> Result<Exp2Coefficients> {
    if noise.n_qubits() != 2 {
        return Err(Error::UnsupportedGroup {
            kind: format!("one-sided twirl on {} qubit(s)", noise.n_qubits()),
        });
    }
    let mut alpha0 = DMatrix::zeros(4, 4);
    let mut alpha1 = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for k in 0..4 {
            alpha0[(i, k)] = noise.mat[(i, k)];
            let mut acc = 0.0;
            for j in 1..4 {
                acc += noise.mat[(i + 4 * j, k + 4 * j)];
            }
            alpha1[(i, k)] = acc / 3.0;
        }
    }
    Ok(Exp2Coefficients { alpha0, alpha1 })
}

/// Average gate fidelity of a depolarizing channel with parameter `p` on a
/// `d`-dimensional space.
pub fn depol_to_avg_fidelity(p: f64, d: usize) -> f64 {
    let d = d as f64;
    p + (1.0 - p) / d
}

/// Depolarizing parameter matching an average gate fidelity.
pub fn avg_fidelity_to_depol(fbar: f64, d: usize) -> f64 {
    let d = d as f64;
    (d * fbar - 1.0) / (d - 1.0)
}

/// Average error rate of a depolarizing channel, `(1 - p)(d - 1)/d`.
pub fn depol_to_error_rate(p: f64, d: usize) -> f64 {
    let d = d as f64;
    (1.0 - p) * (d - 1.0) / d
}

/// Rescales a Clifford-level average fidelity to the physical-rotation
/// level using the average rotation count of the standard decompositions.
pub fn single_qubit_rescale(fbar: f64) -> f64 {
    1.0 - (1.0 - fbar) / crate::clifford::average_rotations_per_c1()
}

/// Diagonal entry of the subspace-depolarizing reference channel: the value
/// the channel that depolarizes subspace `s` takes on Pauli index `i`,
/// `(1 + sum_{P in s} (-1)^{<P, P_i>}) / (dim(s) + 1)`, evaluated purely
/// through symplectic commutation.
pub fn r_depol_entry(n: usize, s: &Subspace, pauli_index: usize) -> Result<f64> {
    let target = PauliString::new(n, pauli_index)?;
    let mut acc = 1.0;
    for &member in &s.members {
        let p = PauliString::new(n, member)?;
        if p.anticommutes_with(&target) {
            acc -= 1.0;
        } else {
            acc += 1.0;
        }
    }
    Ok(acc / (s.dim() as f64 + 1.0))
}

/// Upper CPTP bound for the weight on a subspace of the given dimension.
pub fn epsilon_bound(dim: usize) -> f64 {
    (dim as f64 + 1.0) / dim as f64
}

/// The channel placing weight `eps` on subspace `s`:
/// `rho -> (1 - eps) rho + eps/(dim+1) (rho + sum_{P in s} P rho P)`,
/// expressed as a Pauli channel.
pub fn fixed_weight_channel(n: usize, s: &Subspace, eps: f64) -> Result<crate::noise::NoiseModel> {
    if !(-ADMIT_TOL..=epsilon_bound(s.dim()) + ADMIT_TOL).contains(&eps) {
        return Err(Error::ParameterOutOfRange {
            name: "eps",
            value: eps,
            range: "[0, (dim+1)/dim]",
        });
    }
    let share = eps / (s.dim() as f64 + 1.0);
    let mut probs = vec![(PauliString::identity(n), 1.0 - eps + share)];
    for &member in &s.members {
        probs.push((PauliString::new(n, member)?, share));
    }
    crate::noise::NoiseModel::pauli_channel(n, probs)
}

/// Weights placed on the nontrivial subspaces of a decomposition.
#[derive(Clone, Debug)]
pub struct EpsilonSet {
    /// Labels of the nontrivial subspaces, aligned with `values`.
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    /// Set when both inversion roots were admissible and the one continuous
    /// with zero noise was chosen.
    pub root_ambiguous: bool,
}

/// Decay rates of the composition of fixed-subspace-weight channels: for
/// each subspace `j`, `alpha_j = prod_S (1 + eps_S (r_S(j) - 1))` with
/// `r_S(j)` the reference-channel entry of [`r_depol_entry`].
pub fn alpha_from_epsilon(dec: &IrrepDecomposition, eps: &[f64]) -> Result<AlphaSet> {
    let nontrivial: Vec<&Subspace> = dec.subspaces().iter().skip(1).collect();
    if eps.len() != nontrivial.len() {
        return Err(Error::InvalidConfig(format!(
            "expected {} subspace weights, got {}",
            nontrivial.len(),
            eps.len()
        )));
    }
    for (s, &e) in nontrivial.iter().zip(eps) {
        let bound = epsilon_bound(s.dim());
        if !(-ADMIT_TOL..=bound + ADMIT_TOL).contains(&e) {
            return Err(Error::ParameterOutOfRange {
                name: "eps",
                value: e,
                range: "[0, (dim+1)/dim]",
            });
        }
    }
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for sub in dec.subspaces() {
        let representative = sub.members[0];
        let mut alpha = 1.0;
        for (s, &e) in nontrivial.iter().zip(eps) {
            alpha *= 1.0 + e * (r_depol_entry(dec.n_qubits(), s, representative)? - 1.0);
        }
        labels.push(sub.label.clone());
        values.push(alpha);
    }
    Ok(AlphaSet { labels, values })
}

/// Inverts [`alpha_from_epsilon`] for the two-qubit product decomposition.
///
/// The quadratic for the qubit-0 weight has two roots; both are completed
/// to candidate triples, inadmissible ones (outside the CPTP box) are
/// dropped, and if both survive the root with the smaller qubit-0 weight is
/// returned, which is the branch continuous with the noiseless limit. The
/// ambiguity is flagged on the result. The parametrization is genuinely
/// two-to-one on part of the admissible box, so outside the continuous
/// branch the round trip through this inversion need not return the
/// original weights.
pub fn epsilon_from_alpha(dec: &IrrepDecomposition, alphas: &AlphaSet) -> Result<EpsilonSet> {
    if dec.subspaces().len() != 4 || dec.n_qubits() != 2 {
        return Err(Error::UnsupportedGroup {
            kind: dec.kind().to_string(),
        });
    }
    let a1 = alphas
        .get("W1")
        .ok_or_else(|| Error::InvalidConfig("missing W1 decay rate".into()))?;
    let a2 = alphas
        .get("W2")
        .ok_or_else(|| Error::InvalidConfig("missing W2 decay rate".into()))?;
    let a3 = alphas
        .get("W3")
        .ok_or_else(|| Error::InvalidConfig("missing W3 decay rate".into()))?;
    for (i, &a) in [a1, a2, a3].iter().enumerate() {
        if a <= 0.0 {
            return Err(Error::NonPositiveAlpha {
                index: i + 1,
                value: a,
            });
        }
    }

    // Discriminant of the quadratic in the qubit-0 weight; alpha3/gamma
    // with gamma = alpha1/alpha2.
    let disc = (a2 * a2 + 3.0 * a3 * a2 / a1).sqrt();
    let mut candidates = Vec::new();
    for (which, eps2) in [(0usize, 1.0 + a2 - disc), (1usize, 1.0 + a2 + disc)] {
        if (1.0 - eps2).abs() < 1e-14 {
            continue;
        }
        let eps3 = (5.0 / 6.0) * (1.0 - a2 / (1.0 - eps2));
        let eps1 = 1.0 - (a1 / a2) * (1.0 - eps2);
        let bound12 = epsilon_bound(3);
        let bound3 = epsilon_bound(9);
        let admissible = (-ADMIT_TOL..=bound12 + ADMIT_TOL).contains(&eps1)
            && (-ADMIT_TOL..=bound12 + ADMIT_TOL).contains(&eps2)
            && (-ADMIT_TOL..=bound3 + ADMIT_TOL).contains(&eps3);
        if admissible {
            candidates.push((which, [eps1, eps2, eps3]));
        }
    }

    let root_ambiguous = candidates.len() == 2;
    let chosen = candidates
        .into_iter()
        .min_by(|a, b| {
            a.1[1]
                .abs()
                .partial_cmp(&b.1[1].abs())
                .expect("weights are finite")
        })
        .ok_or(Error::NoAdmissibleEpsilon)?;

    Ok(EpsilonSet {
        labels: vec!["W1".into(), "W2".into(), "W3".into()],
        values: chosen.1.to_vec(),
        root_ambiguous,
    })
}

/// Crosstalk witness `alpha3 - alpha1 * alpha2` of a two-qubit product
/// twirl; zero exactly for tensor product noise.
pub fn delta_alpha(alphas: &AlphaSet) -> Result<f64> {
    let (a1, a2, a3) = match (
        alphas.get("W1"),
        alphas.get("W2"),
        alphas.get("W3"),
    ) {
        (Some(a1), Some(a2), Some(a3)) => (a1, a2, a3),
        _ => {
            return Err(Error::InvalidConfig(
                "crosstalk witness needs W1, W2 and W3 decay rates".into(),
            ))
        }
    };
    Ok(a3 - a1 * a2)
}

/// Interleaved benchmarking estimate for a target gate.
#[derive(Clone, Copy, Debug)]
pub struct InterleavedEstimate {
    /// Point estimate of the target gate error rate.
    pub r_est: f64,
    /// Half-width of the guaranteed interval around the estimate.
    pub bound: f64,
    /// The simple bound branch.
    pub bound_simple: f64,
    /// The refined bound branch, tighter deep in the high-fidelity regime.
    pub bound_refined: f64,
}

/// Combines reference and interleaved decay parameters into the target-gate
/// error estimate and its interval half-width (the smaller of the two bound
/// branches; both are reported so the applied regime is visible).
pub fn interleaved_estimate(p: f64, p_interleaved: f64, d: usize) -> Result<InterleavedEstimate> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "p",
            value: p,
            range: "(0, 1]",
        });
    }
    if !(p_interleaved > 0.0 && p_interleaved <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "p_interleaved",
            value: p_interleaved,
            range: "(0, 1]",
        });
    }
    let df = d as f64;
    let ratio = p_interleaved / p;
    let r_est = (df - 1.0) * (1.0 - ratio) / df;
    let bound_simple = (df - 1.0) * ((p - ratio).abs() + (1.0 - p)) / df;
    let d2 = df * df;
    let bound_refined =
        2.0 * (d2 - 1.0) * (1.0 - p) / (p * d2) + 4.0 * (1.0 - p).sqrt() * (d2 - 1.0).sqrt() / p;
    Ok(InterleavedEstimate {
        r_est,
        bound: bound_simple.min(bound_refined),
        bound_simple,
        bound_refined,
    })
}
