//! Sequence generation and simulation for the benchmarking protocols.
//!
//! # Overview
//!
//! Every protocol here shares one simulation engine: random gate sequences
//! are drawn from a gate set group, each gate's transfer matrix is applied
//! to the vectorized state followed by the noise channel, an inverse gate
//! (where the protocol uses one) undoes the ideal word with a trailing
//! noise insertion of its own, and observables are read off the final state
//! either as exact expectation values or as shot-sampled estimates. On top
//! of that engine sit the five protocols: standard benchmarking over a full
//! Clifford group, simultaneous benchmarking over per-qubit product groups
//! (three experiment variants), correlated benchmarking which fits one
//! decay per invariant subspace and inverts the rates into subspace noise
//! weights, interleaved benchmarking which alternates a fixed target gate
//! with the random gates, and shadow collection which stores raw
//! `(length, gates, outcome)` records with no inverse for later
//! post-processing.
//!
//! Determinism: every sequence gets its own counter-based stream of a
//! seeded ChaCha generator, so datasets are reproducible bit-for-bit for a
//! fixed seed regardless of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::clifford::{CliffordElement, GateSetGroup, GroupKind};
use crate::error::{Error, Result};
use crate::fit::{self, DecayModel, FitResult};
use crate::liouville::{compose, expectation, LiouvilleVector, Ptm};
use crate::noise::{NoiseModel, SpamModel};
use crate::pauli::PauliString;
use crate::twirl::{
    epsilon_from_alpha, exhaustive_twirl, interleaved_estimate, AlphaSet, EpsilonSet,
    InterleavedEstimate, IrrepDecomposition,
};

/// Largest number of sequences the exhaustive mode will enumerate.
pub const EXHAUSTIVE_SEQUENCE_LIMIT: u128 = 1_000_000;

/// The simultaneous-benchmarking experiment variants: benchmark qubit 0
/// with qubit 1 idle, the reverse, or both qubits at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimExperiment {
    /// Gates on qubit 0 only.
    First,
    /// Gates on qubit 1 only.
    Second,
    /// Independent gates on both qubits.
    Joint,
}

impl SimExperiment {
    /// The gate set group the experiment draws from.
    pub fn group(&self) -> GroupKind {
        match self {
            SimExperiment::First => GroupKind::C1xI,
            SimExperiment::Second => GroupKind::IxC1,
            SimExperiment::Joint => GroupKind::C1xC1,
        }
    }
}

/// Which protocol a configuration drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Standard,
    Simultaneous(SimExperiment),
    Correlated,
    /// Interleaves the group element with this id after every random gate.
    Interleaved { target: usize },
    Shadow,
}

/// How the average over sequences is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SequenceMode {
    /// Draw `sequences_per_length` random sequences per length.
    Sampled,
    /// Enumerate every sequence of each length (exact mode only, guarded
    /// by [`EXHAUSTIVE_SEQUENCE_LIMIT`]).
    Exhaustive,
    /// Evaluate the exact sequence average analytically through the
    /// twirled channel, with no per-sequence enumeration at all.
    Averaged,
}

/// An observable recorded per sequence length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservableSpec {
    /// Probability of measuring the initial bitstring back.
    Survival,
    /// Expectation of a normalized Pauli string, given by its letters with
    /// qubit 0 first; shot mode supports only diagonal (I/Z) strings.
    PauliExpectation(String),
    /// Marginal probability that the given qubit reads 0.
    UpProbability { qubit: usize },
}

impl ObservableSpec {
    /// Dataset label of the observable.
    pub fn label(&self) -> String {
        match self {
            ObservableSpec::Survival => "survival".into(),
            ObservableSpec::PauliExpectation(letters) => letters.clone(),
            ObservableSpec::UpProbability { qubit } => format!("up{qubit}"),
        }
    }
}

/// Full description of one benchmarking run.
#[derive(Clone, Debug)]
pub struct RbConfig {
    pub protocol: Protocol,
    pub group: GroupKind,
    /// Sequence lengths `m`, each at least 1.
    pub lengths: Vec<usize>,
    /// Number of random sequences per length.
    pub sequences_per_length: usize,
    /// Measurement shots per sequence; 0 records exact expectation values.
    pub shots: usize,
    pub seed: u64,
    pub noise: NoiseModel,
    pub spam: SpamModel,
    /// Noise attached to the interleaved target gate in place of the
    /// global noise; `None` means the target suffers the global noise.
    pub target_noise: Option<NoiseModel>,
    pub sequence_mode: SequenceMode,
    /// Observables to record; empty selects a per-protocol default set.
    pub observables: Vec<ObservableSpec>,
    /// Initial computational state, one bit per qubit, qubit 0 first.
    pub initial_bits: Vec<bool>,
}

impl RbConfig {
    /// A configuration with ideal noise and SPAM, exact expectation
    /// values, sampled sequences and default observables.
    pub fn new(
        protocol: Protocol,
        group: GroupKind,
        lengths: Vec<usize>,
        sequences_per_length: usize,
        seed: u64,
    ) -> RbConfig {
        let n = group.n_qubits();
        RbConfig {
            protocol,
            group,
            lengths,
            sequences_per_length,
            shots: 0,
            seed,
            noise: NoiseModel::Ideal { n },
            spam: SpamModel::ideal(n),
            target_noise: None,
            sequence_mode: SequenceMode::Sampled,
            observables: Vec::new(),
            initial_bits: vec![false; n],
        }
    }

    /// The observables recorded when none are configured explicitly.
    pub fn default_observables(protocol: Protocol) -> Vec<ObservableSpec> {
        match protocol {
            Protocol::Standard | Protocol::Interleaved { .. } => {
                vec![ObservableSpec::Survival]
            }
            Protocol::Simultaneous(SimExperiment::First) => vec![
                ObservableSpec::Survival,
                ObservableSpec::PauliExpectation("ZI".into()),
                ObservableSpec::UpProbability { qubit: 0 },
            ],
            Protocol::Simultaneous(SimExperiment::Second) => vec![
                ObservableSpec::Survival,
                ObservableSpec::PauliExpectation("IZ".into()),
                ObservableSpec::UpProbability { qubit: 1 },
            ],
            Protocol::Simultaneous(SimExperiment::Joint) => vec![
                ObservableSpec::Survival,
                ObservableSpec::PauliExpectation("ZI".into()),
                ObservableSpec::PauliExpectation("IZ".into()),
                ObservableSpec::PauliExpectation("ZZ".into()),
                ObservableSpec::UpProbability { qubit: 0 },
                ObservableSpec::UpProbability { qubit: 1 },
            ],
            Protocol::Correlated => vec![
                ObservableSpec::Survival,
                ObservableSpec::PauliExpectation("IZ".into()),
                ObservableSpec::PauliExpectation("ZI".into()),
                ObservableSpec::PauliExpectation("ZZ".into()),
            ],
            Protocol::Shadow => Vec::new(),
        }
    }

    fn effective_observables(&self) -> Vec<ObservableSpec> {
        if self.observables.is_empty() {
            Self::default_observables(self.protocol)
        } else {
            self.observables.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one sequence length is required".into(),
            ));
        }
        if self.lengths.contains(&0) {
            return Err(Error::ZeroLength);
        }
        if self.sequences_per_length == 0 {
            return Err(Error::InvalidConfig(
                "sequences_per_length must be at least 1".into(),
            ));
        }
        let n = self.group.n_qubits();
        if self.initial_bits.len() != n {
            return Err(Error::InvalidConfig(format!(
                "initial state has {} bit(s) for {} qubit(s)",
                self.initial_bits.len(),
                n
            )));
        }
        let noise_n = self.noise.n_qubits()?;
        if noise_n != n {
            return Err(Error::QubitCountMismatch { na: n, nb: noise_n });
        }
        if let Some(target_noise) = &self.target_noise {
            let tn = target_noise.n_qubits()?;
            if tn != n {
                return Err(Error::QubitCountMismatch { na: n, nb: tn });
            }
        }
        Ok(())
    }
}

/// Statistics of one observable at one sequence length.
#[derive(Clone, Debug)]
pub struct DecayCell {
    pub observable: String,
    pub m: usize,
    /// Mean over sequences (of per-sequence shot means in shot mode).
    pub mean: f64,
    /// Unbiased sample variance over sequences; 0 for a single sequence.
    pub variance: f64,
    /// Number of sequences contributing.
    pub count: usize,
}

/// Per-length statistics for every recorded observable.
#[derive(Clone, Debug, Default)]
pub struct DecayDataset {
    pub cells: Vec<DecayCell>,
}

impl DecayDataset {
    /// Observable labels in first-appearance order.
    pub fn observables(&self) -> Vec<String> {
        let mut labels = Vec::new();
        for cell in &self.cells {
            if !labels.contains(&cell.observable) {
                labels.push(cell.observable.clone());
            }
        }
        labels
    }

    /// `(m, mean)` series of one observable, sorted by length.
    pub fn series(&self, observable: &str) -> Vec<(f64, f64)> {
        let mut points: Vec<(f64, f64)> = self
            .cells
            .iter()
            .filter(|c| c.observable == observable)
            .map(|c| (c.m as f64, c.mean))
            .collect();
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("lengths are finite"));
        points
    }

    pub fn cell(&self, observable: &str, m: usize) -> Option<&DecayCell> {
        self.cells
            .iter()
            .find(|c| c.observable == observable && c.m == m)
    }

    fn push_series(&mut self, observable: &str, m: usize, values: &[f64]) {
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let variance = if count > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        self.cells.push(DecayCell {
            observable: observable.to_string(),
            m,
            mean,
            variance,
            count,
        });
    }
}

/// One collected shadow tuple: sequence length, the drawn gate ids and the
/// measured bitstring (qubit 0 first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowRecord {
    pub m: usize,
    pub gate_ids: Vec<usize>,
    pub outcome: Vec<bool>,
}

/// Everything run_correlated_rb produces: the raw decays, the per-subspace
/// exponential fits, the assembled decay rates and the inverted weights.
#[derive(Clone, Debug)]
pub struct CorrelatedOutcome {
    pub dataset: DecayDataset,
    /// `(observable label, fit)` per nontrivial subspace, in subspace
    /// order.
    pub fits: Vec<(String, FitResult)>,
    pub alphas: AlphaSet,
    pub epsilons: EpsilonSet,
}

/// Everything run_interleaved_rb produces: both stage datasets and fits,
/// the decay parameters and the combined error estimate.
#[derive(Clone, Debug)]
pub struct InterleavedOutcome {
    pub reference: DecayDataset,
    pub interleaved: DecayDataset,
    pub reference_fit: FitResult,
    pub interleaved_fit: FitResult,
    pub p: f64,
    pub p_interleaved: f64,
    pub estimate: InterleavedEstimate,
}

/// Outcome bits of computational-basis outcome `x`, qubit 0 first, with
/// qubit 0 as the most significant position so the printed bitstring reads
/// left to right.
pub fn outcome_bits(x: usize, n: usize) -> Vec<bool> {
    (0..n).map(|q| (x >> (n - 1 - q)) & 1 == 1).collect()
}

/// Outcome index of a bitstring, inverse of [`outcome_bits`].
pub fn outcome_index(bits: &[bool]) -> usize {
    bits.iter()
        .fold(0usize, |acc, &b| (acc << 1) | usize::from(b))
}

struct CompiledObservable {
    label: String,
    /// SPAM-dressed linear functional: the exact value is its dot product
    /// with the final state.
    vector: LiouvilleVector,
    /// Value contributed by each computational outcome in shot mode;
    /// absent for observables that are not diagonal in that basis.
    outcome_values: Option<Vec<f64>>,
}

struct InterleaveStep {
    element: CliffordElement,
    noise: Ptm,
}

/// Shared simulation engine: the compiled group, channels, SPAM-dressed
/// state and effects, and observables of one run.
struct Engine {
    group: std::sync::Arc<GateSetGroup>,
    n: usize,
    noise: Ptm,
    rho: LiouvilleVector,
    effects: Vec<LiouvilleVector>,
    observables: Vec<CompiledObservable>,
    interleave: Option<InterleaveStep>,
}

impl Engine {
    fn build(cfg: &RbConfig, specs: &[ObservableSpec], target: Option<usize>) -> Result<Engine> {
        cfg.validate()?;
        let group = GateSetGroup::generate(cfg.group)?;
        let n = group.n_qubits();
        let noise = cfg.noise.compile()?;
        let (prep, meas) = cfg.spam.compile()?;
        let rho = prep.apply(&LiouvilleVector::computational_state(&cfg.initial_bits));
        let effects: Vec<LiouvilleVector> = (0..1usize << n)
            .map(|x| meas.apply_adjoint(&LiouvilleVector::computational_state(&outcome_bits(x, n))))
            .collect();

        let initial_index = outcome_index(&cfg.initial_bits);
        let mut observables = Vec::new();
        for spec in specs {
            observables.push(compile_observable(
                spec,
                n,
                &meas,
                &effects,
                initial_index,
                cfg.shots,
            )?);
        }

        let interleave = match target {
            Some(id) => {
                let element = group.element(id)?.clone();
                let step_noise = match &cfg.target_noise {
                    Some(model) => model.compile()?,
                    None => noise.clone(),
                };
                Some(InterleaveStep {
                    element,
                    noise: step_noise,
                })
            }
            None => None,
        };

        Ok(Engine {
            group,
            n,
            noise,
            rho,
            effects,
            observables,
            interleave,
        })
    }

    /// Propagates one sequence (with inverse and trailing noise) and
    /// returns one value per observable: exact expectations for
    /// `shots == 0`, shot means otherwise.
    fn sequence_values(&self, ids: &[usize], shots: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
        let mut state = self.rho.clone();
        let mut word = CliffordElement::identity(self.n);
        for &id in ids {
            let element = self.group.element(id).expect("ids come from this group");
            state = element.apply_liouville(&state);
            state = self.noise.apply(&state);
            word = element.compose(&word);
            if let Some(step) = &self.interleave {
                state = step.element.apply_liouville(&state);
                state = step.noise.apply(&state);
                word = step.element.compose(&word);
            }
        }
        let inverse = word.inverse();
        state = inverse.apply_liouville(&state);
        state = self.noise.apply(&state);

        if shots == 0 {
            return self
                .observables
                .iter()
                .map(|obs| expectation(&obs.vector, &state))
                .collect();
        }

        let probabilities = self.outcome_probabilities(&state);
        let mut acc = vec![0.0; self.observables.len()];
        for _ in 0..shots {
            let x = sample_outcome(&probabilities, rng);
            for (slot, obs) in acc.iter_mut().zip(&self.observables) {
                *slot += obs
                    .outcome_values
                    .as_ref()
                    .expect("sampleability was checked at compile time")[x];
            }
        }
        acc.iter().map(|a| a / shots as f64).collect()
    }

    /// Final state of a shadow sequence: noisy gates only, no inverse.
    fn shadow_state(&self, ids: &[usize]) -> LiouvilleVector {
        let mut state = self.rho.clone();
        for &id in ids {
            let element = self.group.element(id).expect("ids come from this group");
            state = element.apply_liouville(&state);
            state = self.noise.apply(&state);
        }
        state
    }

    fn outcome_probabilities(&self, state: &LiouvilleVector) -> Vec<f64> {
        self.effects
            .iter()
            .map(|e| expectation(e, state).max(0.0))
            .collect()
    }

    /// Exact mean and spread over sequences evaluated analytically: the
    /// sequence average of the propagated channel equals the trailing
    /// noise composed with the m-th power of the group-twirled noise, so a
    /// single matrix power replaces the enumeration.
    fn averaged_dataset(&self, lengths: &[usize]) -> DecayDataset {
        let twirl_input = match &self.interleave {
            Some(step) => {
                // Twirled unit of the interleaved word: the target's own
                // noise composed with the target-conjugated global noise.
                let conjugated = step.element.inverse().conjugate_ptm(&self.noise);
                compose(&step.noise, &conjugated)
            }
            None => self.noise.clone(),
        };
        let twirled = exhaustive_twirl(&twirl_input, &self.group);

        let mut sorted: Vec<usize> = lengths.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let dim = twirled.dim();
        let mut power = nalgebra::DMatrix::identity(dim, dim);
        let mut powered = std::collections::HashMap::new();
        let mut reached = 0usize;
        for &m in &sorted {
            for _ in reached..m {
                power = &twirled.mat * power;
            }
            reached = m;
            powered.insert(m, &self.noise.mat * &power);
        }

        let mut dataset = DecayDataset::default();
        for obs in &self.observables {
            for &m in lengths {
                let transfer = &powered[&m];
                let final_state = LiouvilleVector::new(self.n, transfer * &self.rho.coeffs)
                    .expect("dimensions are consistent");
                let value = expectation(&obs.vector, &final_state);
                dataset.push_series(&obs.label, m, &[value]);
            }
        }
        dataset
    }

    fn run(&self, cfg: &RbConfig, stage_flag: bool) -> Result<DecayDataset> {
        match cfg.sequence_mode {
            SequenceMode::Averaged => {
                if cfg.shots != 0 {
                    return Err(Error::InvalidConfig(
                        "analytic sequence averaging is exact; set shots = 0".into(),
                    ));
                }
                Ok(self.averaged_dataset(&cfg.lengths))
            }
            SequenceMode::Exhaustive => {
                if cfg.shots != 0 {
                    return Err(Error::InvalidConfig(
                        "exhaustive enumeration is exact; set shots = 0".into(),
                    ));
                }
                let mut dataset = DecayDataset::default();
                let order = self.group.order();
                for &m in &cfg.lengths {
                    let count = (order as u128)
                        .checked_pow(m as u32)
                        .unwrap_or(u128::MAX);
                    if count > EXHAUSTIVE_SEQUENCE_LIMIT {
                        return Err(Error::ExhaustiveTooLarge {
                            count,
                            limit: EXHAUSTIVE_SEQUENCE_LIMIT,
                        });
                    }
                    let mut per_observable =
                        vec![Vec::with_capacity(count as usize); self.observables.len()];
                    let mut ids = vec![0usize; m];
                    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
                    loop {
                        let values = self.sequence_values(&ids, 0, &mut rng);
                        for (series, value) in per_observable.iter_mut().zip(values) {
                            series.push(value);
                        }
                        // Mixed-radix increment over the id word.
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
                    for (obs, series) in self.observables.iter().zip(&per_observable) {
                        dataset.push_series(&obs.label, m, series);
                    }
                }
                Ok(dataset)
            }
            SequenceMode::Sampled => {
                let mut dataset = DecayDataset::default();
                for (m_index, &m) in cfg.lengths.iter().enumerate() {
                    let mut per_observable =
                        vec![Vec::with_capacity(cfg.sequences_per_length); self.observables.len()];
                    for k in 0..cfg.sequences_per_length {
                        let mut rng = sequence_rng(cfg.seed, m_index, k, stage_flag);
                        let ids = self.group.sample_indices(m, &mut rng)?;
                        let values = self.sequence_values(&ids, cfg.shots, &mut rng);
                        for (series, value) in per_observable.iter_mut().zip(values) {
                            series.push(value);
                        }
                    }
                    for (obs, series) in self.observables.iter().zip(&per_observable) {
                        dataset.push_series(&obs.label, m, series);
                    }
                }
                Ok(dataset)
            }
        }
    }
}

/// Generator for one sequence: a fixed stream of the seeded generator,
/// indexed by length position and sequence number (interleaved second
/// stages get their own stream half).
fn sequence_rng(seed: u64, m_index: usize, k: usize, stage_flag: bool) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut stream = ((m_index as u64) << 32) | (k as u64 & 0xFFFF_FFFF);
    if stage_flag {
        stream |= 1 << 63;
    }
    rng.set_stream(stream);
    rng
}

fn sample_outcome(probabilities: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let total: f64 = probabilities.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut chosen = probabilities.len() - 1;
    for (x, &p) in probabilities.iter().enumerate() {
        if u < p {
            chosen = x;
            break;
        }
        u -= p;
    }
    chosen
}

fn compile_observable(
    spec: &ObservableSpec,
    n: usize,
    meas: &Ptm,
    effects: &[LiouvilleVector],
    initial_index: usize,
    shots: usize,
) -> Result<CompiledObservable> {
    let label = spec.label();
    match spec {
        ObservableSpec::Survival => Ok(CompiledObservable {
            label,
            vector: effects[initial_index].clone(),
            outcome_values: Some(
                (0..effects.len())
                    .map(|x| if x == initial_index { 1.0 } else { 0.0 })
                    .collect(),
            ),
        }),
        ObservableSpec::PauliExpectation(letters) => {
            let pauli = PauliString::from_letters(letters)?;
            if pauli.n_qubits() != n {
                return Err(Error::QubitCountMismatch {
                    na: n,
                    nb: pauli.n_qubits(),
                });
            }
            let mut raw = LiouvilleVector::zeros(n);
            raw.coeffs[pauli.index()] = 1.0;
            let diagonal = (0..n).all(|q| {
                let letter = pauli.letter(q);
                letter == 0 || letter == 3
            });
            let outcome_values = if diagonal {
                let scale = 1.0 / (crate::pauli::hilbert_dim(n) as f64).sqrt();
                Some(
                    (0..effects.len())
                        .map(|x| {
                            let bits = outcome_bits(x, n);
                            let sign = (0..n)
                                .filter(|&q| pauli.letter(q) == 3 && bits[q])
                                .count();
                            if sign % 2 == 0 { scale } else { -scale }
                        })
                        .collect(),
                )
            } else {
                None
            };
            if shots > 0 && outcome_values.is_none() {
                return Err(Error::ObservableNotSampleable { observable: label });
            }
            Ok(CompiledObservable {
                label,
                vector: meas.apply_adjoint(&raw),
                outcome_values,
            })
        }
        ObservableSpec::UpProbability { qubit } => {
            if *qubit >= n {
                return Err(Error::InvalidConfig(format!(
                    "marginal qubit {qubit} out of range for {n} qubit(s)"
                )));
            }
            let mut vector = LiouvilleVector::zeros(n);
            let mut outcome_values = vec![0.0; effects.len()];
            for (x, effect) in effects.iter().enumerate() {
                if !outcome_bits(x, n)[*qubit] {
                    vector.coeffs += &effect.coeffs;
                    outcome_values[x] = 1.0;
                }
            }
            Ok(CompiledObservable {
                label,
                vector,
                outcome_values: Some(outcome_values),
            })
        }
    }
}

/// Runs standard benchmarking over a full Clifford group: random words,
/// appended inverse, survival probability (and any further configured
/// observables) per length.
pub fn run_standard_rb(cfg: &RbConfig) -> Result<DecayDataset> {
    if !matches!(cfg.group, GroupKind::C1 | GroupKind::C2) {
        return Err(Error::UnsupportedGroup {
            kind: format!("{} for standard benchmarking", cfg.group),
        });
    }
    let specs = cfg.effective_observables();
    let engine = Engine::build(cfg, &specs, None)?;
    engine.run(cfg, false)
}

/// Runs one simultaneous-benchmarking experiment over the matching product
/// group, recording survival, Pauli expectations and per-qubit marginals.
pub fn run_simultaneous_rb(cfg: &RbConfig) -> Result<DecayDataset> {
    let experiment = match cfg.protocol {
        Protocol::Simultaneous(experiment) => experiment,
        _ => {
            return Err(Error::InvalidConfig(
                "configuration does not request a simultaneous experiment".into(),
            ))
        }
    };
    if cfg.group != experiment.group() {
        return Err(Error::InvalidConfig(format!(
            "experiment {:?} runs over {}, configured group is {}",
            experiment,
            experiment.group(),
            cfg.group
        )));
    }
    let specs = cfg.effective_observables();
    let engine = Engine::build(cfg, &specs, None)?;
    engine.run(cfg, false)
}

/// Runs correlated benchmarking: simultaneous sequences over the two-qubit
/// product group, one exponential fit per invariant-subspace correlator,
/// and inversion of the fitted decay rates into subspace noise weights.
pub fn run_correlated_rb(cfg: &RbConfig) -> Result<CorrelatedOutcome> {
    if cfg.group != GroupKind::C1xC1 {
        return Err(Error::UnsupportedGroup {
            kind: format!("{} for correlated benchmarking", cfg.group),
        });
    }
    let specs = cfg.effective_observables();
    let engine = Engine::build(cfg, &specs, None)?;
    let dataset = engine.run(cfg, false)?;

    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1)?;
    let mut fits = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for subspace in dec.subspaces().iter().skip(1) {
        let subspace_mask = PauliString::new(2, subspace.members[0])?.support_mask();
        let observable = specs
            .iter()
            .find_map(|spec| match spec {
                ObservableSpec::PauliExpectation(letters) => {
                    let pauli = PauliString::from_letters(letters).ok()?;
                    (pauli.support_mask() == subspace_mask).then(|| spec.label())
                }
                _ => None,
            })
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "no Pauli correlator covers subspace {}",
                    subspace.label
                ))
            })?;
        let series = dataset.series(&observable);
        let fit = fit::fit(DecayModel::SingleExp, &series, None)?;
        labels.push(subspace.label.clone());
        values.push(fit.value_of("p").expect("single-exponential rate slot"));
        fits.push((observable, fit));
    }
    let alphas = AlphaSet { labels, values };
    let epsilons = epsilon_from_alpha(&dec, &alphas)?;
    Ok(CorrelatedOutcome {
        dataset,
        fits,
        alphas,
        epsilons,
    })
}

/// Runs interleaved benchmarking: a reference stage of plain random words
/// and a second stage with the target gate (carrying its own noise if
/// configured) inserted after every random gate, then combines the two
/// fitted decays into the target error estimate.
pub fn run_interleaved_rb(cfg: &RbConfig) -> Result<InterleavedOutcome> {
    let target = match cfg.protocol {
        Protocol::Interleaved { target } => target,
        _ => {
            return Err(Error::InvalidConfig(
                "configuration does not request an interleaved run".into(),
            ))
        }
    };
    if !matches!(cfg.group, GroupKind::C1 | GroupKind::C2) {
        return Err(Error::UnsupportedGroup {
            kind: format!("{} for interleaved benchmarking", cfg.group),
        });
    }
    let specs = cfg.effective_observables();
    if !specs.contains(&ObservableSpec::Survival) {
        return Err(Error::InvalidConfig(
            "interleaved benchmarking fits the survival probability; include it".into(),
        ));
    }

    let reference_engine = Engine::build(cfg, &specs, None)?;
    let reference = reference_engine.run(cfg, false)?;
    let interleaved_engine = Engine::build(cfg, &specs, Some(target))?;
    let interleaved = interleaved_engine.run(cfg, true)?;

    let reference_fit = fit::fit(DecayModel::SingleExp, &reference.series("survival"), None)?;
    let interleaved_fit =
        fit::fit(DecayModel::SingleExp, &interleaved.series("survival"), None)?;
    let p = reference_fit
        .value_of("p")
        .expect("single-exponential rate slot");
    let p_interleaved = interleaved_fit
        .value_of("p")
        .expect("single-exponential rate slot");
    let estimate = interleaved_estimate(p, p_interleaved, crate::pauli::hilbert_dim(cfg.group.n_qubits()))?;
    Ok(InterleavedOutcome {
        reference,
        interleaved,
        reference_fit,
        interleaved_fit,
        p,
        p_interleaved,
        estimate,
    })
}

/// Collects shadow records: for each length and sequence, draws the gates,
/// propagates the noisy word with no inverse, samples one computational
/// outcome through the SPAM-dressed effects and stores the tuple.
pub fn shadow_collect(cfg: &RbConfig) -> Result<Vec<ShadowRecord>> {
    if cfg.shots < 1 {
        return Err(Error::InvalidConfig(
            "shadow collection measures one bitstring per sequence; set shots >= 1".into(),
        ));
    }
    if cfg.sequence_mode != SequenceMode::Sampled {
        return Err(Error::InvalidConfig(
            "shadow collection draws random sequences; use the sampled mode".into(),
        ));
    }
    let engine = Engine::build(cfg, &[], None)?;
    let mut records = Vec::with_capacity(cfg.lengths.len() * cfg.sequences_per_length);
    for (m_index, &m) in cfg.lengths.iter().enumerate() {
        for k in 0..cfg.sequences_per_length {
            let mut rng = sequence_rng(cfg.seed, m_index, k, false);
            let gate_ids = engine.group.sample_indices(m, &mut rng)?;
            let state = engine.shadow_state(&gate_ids);
            let probabilities = engine.outcome_probabilities(&state);
            let x = sample_outcome(&probabilities, &mut rng);
            records.push(ShadowRecord {
                m,
                gate_ids,
                outcome: outcome_bits(x, engine.n),
            });
        }
    }
    Ok(records)
}

/// The exact outcome distribution of one shadow sequence, indexed by
/// [`outcome_index`]; used to certify sampled collection and to enumerate
/// expectation values without sampling noise.
pub fn shadow_outcome_distribution(cfg: &RbConfig, gate_ids: &[usize]) -> Result<Vec<f64>> {
    let engine = Engine::build(cfg, &[], None)?;
    let state = engine.shadow_state(gate_ids);
    Ok(engine.outcome_probabilities(&state))
}
