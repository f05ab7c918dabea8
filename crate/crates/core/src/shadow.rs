//! Correlation-function post-processing of shadow records.
//!
//! # Overview
//!
//! Shadow collection stores raw `(length, gates, outcome)` tuples and
//! defers all analysis to classical post-processing. Here a probe operator
//! `A` is interleaved between the ideal transfer matrices of the recorded
//! gates, giving one correlation value per record,
//! `f_A = alpha <<E_x| R(g_m) A R(g_(m-1)) ... A R(g_1) |rho>>`, evaluated
//! with the noiseless gates, state and measurement: no knowledge of the
//! noise enters the estimator. The median of batch means over many records
//! estimates the expectation `k_A(m)`, which in turn follows the compact
//! analytic model `k_A(m) = tr[Theta Phi^(m-1)]`: `Phi` is a small matrix
//! over the invariant subspaces of the gate set holding the decay
//! parameters, and `Theta` absorbs every state-preparation and measurement
//! imperfection. Estimator and model are cross-validated by exhaustive
//! enumeration of short sequences.

use nalgebra::DMatrix;

use crate::clifford::GateSetGroup;
use crate::error::{Error, Result};
use crate::liouville::{expectation, LiouvilleVector, Ptm};
use crate::noise::SpamModel;
use crate::pauli::pauli_dim;
use crate::protocols::{
    outcome_bits, RbConfig, ShadowRecord, EXHAUSTIVE_SEQUENCE_LIMIT,
};
use crate::twirl::IrrepDecomposition;

/// A probe superoperator interleaved into the ideal gate word during
/// post-processing, with the normalization applied to every value.
#[derive(Clone, Debug)]
pub struct ProbeOperator {
    pub name: String,
    /// The probe matrix acting on Liouville space; the analytic model
    /// assumes it is symmetric, which holds for the projector and identity
    /// probes used throughout.
    pub matrix: DMatrix<f64>,
    pub alpha: f64,
}

impl ProbeOperator {
    pub fn new(name: impl Into<String>, matrix: DMatrix<f64>, alpha: f64) -> Result<ProbeOperator> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        Ok(ProbeOperator {
            name: name.into(),
            matrix,
            alpha,
        })
    }

    /// The projector onto one invariant subspace of a decomposition.
    pub fn subspace_projector(
        dec: &IrrepDecomposition,
        j: usize,
        alpha: f64,
    ) -> ProbeOperator {
        let projector = dec.projector(j);
        ProbeOperator {
            name: dec.subspaces()[j].label.clone(),
            matrix: projector.mat,
            alpha,
        }
    }

    /// The identity probe: correlation values reduce to weighted outcome
    /// probabilities.
    pub fn identity(n: usize, alpha: f64) -> ProbeOperator {
        let dim = pauli_dim(n);
        ProbeOperator {
            name: "identity".into(),
            matrix: DMatrix::identity(dim, dim),
            alpha,
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let dim = pauli_dim(n);
        if self.matrix.nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                rows: self.matrix.nrows(),
                cols: self.matrix.ncols(),
            });
        }
        Ok(())
    }
}

/// Propagates the ideal estimator word of a record: the recorded gates with
/// the probe inserted between consecutive gates (none after the last).
fn estimator_vector(
    gate_ids: &[usize],
    probe: &ProbeOperator,
    group: &GateSetGroup,
    initial_bits: &[bool],
) -> Result<LiouvilleVector> {
    let n = group.n_qubits();
    let mut v = LiouvilleVector::computational_state(initial_bits);
    for (i, &id) in gate_ids.iter().enumerate() {
        if i > 0 {
            v = LiouvilleVector::new(n, &probe.matrix * &v.coeffs)?;
        }
        v = group.element(id)?.apply_liouville(&v);
    }
    Ok(v)
}

/// Evaluates the correlation value of one record: the probe-interleaved
/// ideal gate word applied to the ideal state, contracted with the ideal
/// effect of the recorded outcome and scaled by the probe normalization.
pub fn correlation_function(
    record: &ShadowRecord,
    probe: &ProbeOperator,
    group: &GateSetGroup,
    initial_bits: &[bool],
) -> Result<f64> {
    if record.gate_ids.is_empty() {
        return Err(Error::EmptySequence);
    }
    probe.check_dim(group.n_qubits())?;
    if initial_bits.len() != group.n_qubits() {
        return Err(Error::QubitCountMismatch {
            na: group.n_qubits(),
            nb: initial_bits.len(),
        });
    }
    let v = estimator_vector(&record.gate_ids, probe, group, initial_bits)?;
    let effect = LiouvilleVector::computational_state(&record.outcome);
    Ok(probe.alpha * expectation(&effect, &v))
}

/// Median-of-means estimate of `k_A` per sequence length.
///
/// Records are grouped by length in collection order, truncated to
/// `batch_size * k_batches` values, partitioned into `k_batches`
/// consecutive batches of `batch_size`, and the median of the batch means
/// is returned (the average of the two middle values for an even batch
/// count). Returns `(m, estimate)` pairs sorted by length.
pub fn shadow_estimate(
    records: &[ShadowRecord],
    probe: &ProbeOperator,
    group: &GateSetGroup,
    initial_bits: &[bool],
    batch_size: usize,
    k_batches: usize,
) -> Result<Vec<(usize, f64)>> {
    if batch_size == 0 || k_batches == 0 {
        return Err(Error::InvalidConfig(
            "batch size and batch count must be at least 1".into(),
        ));
    }
    let mut by_length: std::collections::BTreeMap<usize, Vec<f64>> =
        std::collections::BTreeMap::new();
    for record in records {
        let value = correlation_function(record, probe, group, initial_bits)?;
        by_length.entry(record.m).or_default().push(value);
    }
    let required = batch_size * k_batches;
    let mut estimates = Vec::with_capacity(by_length.len());
    for (m, values) in by_length {
        if values.len() < required {
            return Err(Error::InsufficientRecords {
                m,
                count: values.len(),
                required,
            });
        }
        let mut means: Vec<f64> = values[..required]
            .chunks(batch_size)
            .map(|batch| batch.iter().sum::<f64>() / batch_size as f64)
            .collect();
        means.sort_by(|a, b| a.partial_cmp(b).expect("correlation values are finite"));
        let median = if k_batches % 2 == 1 {
            means[k_batches / 2]
        } else {
            (means[k_batches / 2 - 1] + means[k_batches / 2]) / 2.0
        };
        estimates.push((m, median));
    }
    Ok(estimates)
}

/// Exact expectation of the correlation value at one length: enumerates
/// every gate sequence, weights every outcome by its exact probability
/// under the noisy run, and averages the correlation values, eliminating
/// both sampling layers. Guarded by [`EXHAUSTIVE_SEQUENCE_LIMIT`].
pub fn shadow_exact_expectation(
    cfg: &RbConfig,
    probe: &ProbeOperator,
    m: usize,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::ZeroLength);
    }
    let group = GateSetGroup::generate(cfg.group)?;
    let n = group.n_qubits();
    probe.check_dim(n)?;
    let order = group.order();
    let count = (order as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if count > EXHAUSTIVE_SEQUENCE_LIMIT {
        return Err(Error::ExhaustiveTooLarge {
            count,
            limit: EXHAUSTIVE_SEQUENCE_LIMIT,
        });
    }
    let noise = cfg.noise.compile()?;
    let (prep, meas) = cfg.spam.compile()?;
    let rho_dressed = prep.apply(&LiouvilleVector::computational_state(&cfg.initial_bits));
    let ideal_effects: Vec<LiouvilleVector> = (0..1usize << n)
        .map(|x| LiouvilleVector::computational_state(&outcome_bits(x, n)))
        .collect();
    let dressed_effects: Vec<LiouvilleVector> = ideal_effects
        .iter()
        .map(|e| meas.apply_adjoint(e))
        .collect();

    let mut acc = 0.0;
    let mut ids = vec![0usize; m];
    loop {
        let mut state = rho_dressed.clone();
        for &id in &ids {
            state = group.element(id)?.apply_liouville(&state);
            state = noise.apply(&state);
        }
        let v = estimator_vector(&ids, probe, &group, &cfg.initial_bits)?;
        for (dressed, ideal) in dressed_effects.iter().zip(&ideal_effects) {
            let probability = expectation(dressed, &state);
            acc += probability * probe.alpha * expectation(ideal, &v);
        }

        let mut digit = 0;
        loop {
            if digit == m {
                break;
            }
            ids[digit] += 1;
            if ids[digit] < order {
                break;
            }
            ids[digit] = 0;
            digit += 1;
        }
        if digit == m {
            break;
        }
    }
    Ok(acc / count as f64)
}

/// The analytic model of `k_A`: a transfer matrix over invariant subspaces
/// and a boundary matrix holding all SPAM dependency.
#[derive(Clone, Debug)]
pub struct ShadowTheory {
    /// Boundary matrix; rank one, built from the dressed state and effects.
    pub theta: DMatrix<f64>,
    /// Transfer matrix `Phi[i][j] = tr(P_i A P_j Lambda) / dim(P_j)`.
    pub phi: DMatrix<f64>,
}

impl ShadowTheory {
    /// Model value `tr[Theta Phi^(m-1)]`.
    pub fn k(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::ZeroLength);
        }
        let size = self.phi.nrows();
        let mut power = DMatrix::identity(size, size);
        for _ in 1..m {
            power = &self.phi * power;
        }
        Ok((&self.theta * power).trace())
    }
}

/// Builds the analytic `k_A` model for a probe, a noise channel and a SPAM
/// model over the invariant subspaces of a decomposition.
///
/// The transfer matrix follows the entry formula of [`ShadowTheory::phi`];
/// the boundary is assembled from the preparation-dressed state and the
/// measurement-dressed effects, so the model predicts the estimator of
/// [`correlation_function`] exactly, which the tests certify against
/// exhaustive enumeration at small lengths.
pub fn shadow_theory_model(
    probe: &ProbeOperator,
    noise: &Ptm,
    dec: &IrrepDecomposition,
    spam: &SpamModel,
    initial_bits: &[bool],
) -> Result<ShadowTheory> {
    let n = noise.n_qubits();
    if dec.n_qubits() != n {
        return Err(Error::QubitCountMismatch {
            na: n,
            nb: dec.n_qubits(),
        });
    }
    if initial_bits.len() != n {
        return Err(Error::QubitCountMismatch {
            na: n,
            nb: initial_bits.len(),
        });
    }
    probe.check_dim(n)?;

    let subspaces = dec.subspaces();
    let size = subspaces.len();
    let mut phi = DMatrix::zeros(size, size);
    for (i, si) in subspaces.iter().enumerate() {
        for (j, sj) in subspaces.iter().enumerate() {
            // tr(P_i A P_j Lambda) over the diagonal 0/1 projectors reduces
            // to a sum over the two member sets.
            let mut trace = 0.0;
            for &a in &si.members {
                for &b in &sj.members {
                    trace += probe.matrix[(a, b)] * noise.mat[(b, a)];
                }
            }
            phi[(i, j)] = trace / sj.dim() as f64;
        }
    }

    let (prep, meas) = spam.compile()?;
    let rho_ideal = LiouvilleVector::computational_state(initial_bits);
    let rho_dressed = prep.apply(&rho_ideal);
    let mut beta = vec![0.0; size];
    for (i, sub) in subspaces.iter().enumerate() {
        let overlap: f64 = sub
            .members
            .iter()
            .map(|&a| rho_dressed.coeffs[a] * rho_ideal.coeffs[a])
            .sum();
        beta[i] = overlap / sub.dim() as f64;
    }

    let mut theta_vec = vec![0.0; size];
    for x in 0..1usize << n {
        let ideal = LiouvilleVector::computational_state(&outcome_bits(x, n));
        let dressed = meas.apply_adjoint(&ideal);
        // <<E~_x| Lambda P_j |E_x>> accumulated per subspace.
        let pulled = noise.apply_adjoint(&dressed);
        for (j, sub) in subspaces.iter().enumerate() {
            let overlap: f64 = sub
                .members
                .iter()
                .map(|&b| pulled.coeffs[b] * ideal.coeffs[b])
                .sum();
            theta_vec[j] += probe.alpha * overlap;
        }
    }

    let mut theta = DMatrix::zeros(size, size);
    for j in 0..size {
        for i in 0..size {
            theta[(j, i)] = theta_vec[j] * beta[i];
        }
    }
    Ok(ShadowTheory { theta, phi })
}
