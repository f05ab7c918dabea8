//! On-disk experiment descriptions.
//!
//! A configuration is a TOML document mirroring [`RbConfig`] field by
//! field. Deserialization is strict: unknown keys anywhere in the document
//! are rejected, and every cross-field invariant of the core configuration
//! is re-checked during conversion so a typo fails the run up front instead
//! of corrupting a benchmarking campaign.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rbsim_core::clifford::{GateSetGroup, GroupKind};
use rbsim_core::linalg::{c, ComplexMatrix};
use rbsim_core::noise::{NoiseModel, ToyCrosstalkParams};
use rbsim_core::pauli::PauliString;
use rbsim_core::protocols::{
    ObservableSpec, Protocol, RbConfig, SequenceMode, SimExperiment,
};

use crate::error::{schema, CliError, Result};
use crate::io::sha256_hex;

/// Top-level TOML document describing one benchmarking run.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: ProtocolName,
    pub group: GroupName,
    /// Sequence lengths `m`, each at least 1.
    pub lengths: Vec<usize>,
    /// Random sequences drawn per length in sampled mode.
    pub sequences_per_length: usize,
    /// Measurement shots per sequence; 0 records exact expectation values.
    #[serde(default)]
    pub shots: usize,
    pub seed: u64,
    #[serde(default)]
    pub sequence_mode: SequenceModeName,
    /// Group element id interleaved after every random gate; required by
    /// the interleaved protocol and rejected elsewhere.
    pub target: Option<usize>,
    /// Initial computational bits, qubit 0 first; omitted means all zeros.
    pub initial_bits: Option<Vec<bool>>,
    /// Observable labels (`"survival"`, `"up<q>"` or Pauli letters);
    /// omitted selects the per-protocol defaults.
    pub observables: Option<Vec<String>>,
    pub noise: Option<NoiseSpec>,
    /// Noise attached to the interleaved target in place of the global
    /// noise; only meaningful for the interleaved protocol.
    pub target_noise: Option<NoiseSpec>,
    pub spam: Option<SpamSpec>,
    pub output: Option<OutputSpec>,
}

/// Protocol selector, the file form of [`Protocol`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolName {
    Standard,
    SimultaneousFirst,
    SimultaneousSecond,
    SimultaneousJoint,
    Correlated,
    Interleaved,
    Shadow,
}

impl ProtocolName {
    /// The canonical config-file spelling.
    pub fn as_str(&self) -> &'static str {
        match self {
            ProtocolName::Standard => "standard",
            ProtocolName::SimultaneousFirst => "simultaneous-first",
            ProtocolName::SimultaneousSecond => "simultaneous-second",
            ProtocolName::SimultaneousJoint => "simultaneous-joint",
            ProtocolName::Correlated => "correlated",
            ProtocolName::Interleaved => "interleaved",
            ProtocolName::Shadow => "shadow",
        }
    }
}

/// Gate set selector, the file form of [`GroupKind`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
pub enum GroupName {
    #[serde(rename = "c1")]
    C1,
    #[serde(rename = "c2")]
    C2,
    #[serde(rename = "c1xc1")]
    C1xC1,
    #[serde(rename = "c1xi")]
    C1xI,
    #[serde(rename = "ixc1")]
    IxC1,
}

impl GroupName {
    pub fn kind(&self) -> GroupKind {
        match self {
            GroupName::C1 => GroupKind::C1,
            GroupName::C2 => GroupKind::C2,
            GroupName::C1xC1 => GroupKind::C1xC1,
            GroupName::C1xI => GroupKind::C1xI,
            GroupName::IxC1 => GroupKind::IxC1,
        }
    }

    /// The canonical config-file spelling.
    pub fn as_str(&self) -> &'static str {
        match self {
            GroupName::C1 => "c1",
            GroupName::C2 => "c2",
            GroupName::C1xC1 => "c1xc1",
            GroupName::C1xI => "c1xi",
            GroupName::IxC1 => "ixc1",
        }
    }

    /// Parses the config-file spelling, for command line flags.
    pub fn parse(text: &str) -> Result<GroupName> {
        match text {
            "c1" => Ok(GroupName::C1),
            "c2" => Ok(GroupName::C2),
            "c1xc1" => Ok(GroupName::C1xC1),
            "c1xi" => Ok(GroupName::C1xI),
            "ixc1" => Ok(GroupName::IxC1),
            other => Err(CliError::Schema(format!(
                "unknown group {other:?}; expected c1, c2, c1xc1, c1xi or ixc1"
            ))),
        }
    }
}

/// Sequence averaging mode, the file form of [`SequenceMode`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceModeName {
    #[default]
    Sampled,
    Exhaustive,
    Averaged,
}

/// Noise channel description, the file form of [`NoiseModel`].
///
/// Externally tagged so each variant keeps strict unknown-key rejection:
/// a depolarizing channel is written as `[noise.depolarizing]` with `n`
/// and `p` keys, and likewise for the other variants.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSpec {
    Ideal(IdealSpec),
    Depolarizing(DepolarizingSpec),
    PauliChannel(PauliChannelSpec),
    ToyCrosstalk(ToyCrosstalkSpec),
    RawKraus(RawKrausSpec),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IdealSpec {
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DepolarizingSpec {
    pub n: usize,
    pub p: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PauliChannelSpec {
    pub n: usize,
    /// `(letters, probability)` rows, e.g. `["XI", 0.01]`, including the
    /// identity weight; the probabilities must sum to 1.
    pub probs: Vec<(String, f64)>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToyCrosstalkSpec {
    pub eps1: bool,
    pub eps2: bool,
    pub p01: f64,
    pub p11: f64,
    pub p21: f64,
    pub p02: f64,
    pub p12: f64,
    pub p22: f64,
    pub p_corr: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawKrausSpec {
    /// Kraus operators as row-major matrices of `[re, im]` entries.
    pub operators: Vec<Vec<Vec<(f64, f64)>>>,
}

impl NoiseSpec {
    /// Builds and validates the core noise model.
    pub fn to_model(&self) -> Result<NoiseModel> {
        let model = match self {
            NoiseSpec::Ideal(s) => NoiseModel::Ideal { n: s.n },
            NoiseSpec::Depolarizing(s) => NoiseModel::Depolarizing { n: s.n, p: s.p },
            NoiseSpec::PauliChannel(s) => {
                let mut probs = Vec::with_capacity(s.probs.len());
                for (letters, q) in &s.probs {
                    probs.push((PauliString::from_letters(letters).map_err(schema)?, *q));
                }
                NoiseModel::PauliChannel { n: s.n, probs }
            }
            NoiseSpec::ToyCrosstalk(s) => NoiseModel::ToyCrosstalk(ToyCrosstalkParams {
                eps1: s.eps1,
                eps2: s.eps2,
                p01: s.p01,
                p11: s.p11,
                p21: s.p21,
                p02: s.p02,
                p12: s.p12,
                p22: s.p22,
                p_corr: s.p_corr,
            }),
            NoiseSpec::RawKraus(s) => {
                let mut operators = Vec::with_capacity(s.operators.len());
                for rows in &s.operators {
                    operators.push(complex_matrix(rows)?);
                }
                NoiseModel::RawKraus { operators }
            }
        };
        model.validate().map_err(schema)?;
        Ok(model)
    }
}

fn complex_matrix(rows: &[Vec<(f64, f64)>]) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::Schema(
            "Kraus operators must be nonempty rectangular matrices".into(),
        ));
    }
    Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| {
        let (re, im) = rows[i][j];
        c(re, im)
    }))
}

/// State preparation and measurement error channels; omitted parts are
/// ideal.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpamSpec {
    pub prep: Option<NoiseSpec>,
    pub meas: Option<NoiseSpec>,
}

/// Artifact file names, resolved relative to the output directory.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Decay statistics CSV; default `decay.csv`.
    pub decay: Option<String>,
    /// Second-stage decay CSV of the interleaved protocol; default
    /// `interleaved.csv`.
    pub interleaved_decay: Option<String>,
    /// Shadow record file; default `records.tsv`.
    pub records: Option<String>,
    /// Run manifest; default `manifest.toml`.
    pub manifest: Option<String>,
    /// Derived-quantity report of the correlated and interleaved
    /// protocols; default `report.toml`.
    pub report: Option<String>,
}

/// Reads and strictly parses a configuration file, returning the parsed
/// document together with the hex digest of the file bytes for manifests.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = toml::from_str(&text).map_err(schema)?;
    Ok((config, sha256_hex(text.as_bytes())))
}

impl ExperimentConfig {
    /// Converts into the core run configuration, re-checking every
    /// invariant the file format cannot express.
    pub fn to_rb_config(&self) -> Result<RbConfig> {
        let group = self.group.kind();
        let n = group.n_qubits();
        let protocol = self.protocol_value()?;
        self.check_group_pairing()?;
        if self.lengths.is_empty() {
            return Err(CliError::Schema(
                "at least one sequence length is required".into(),
            ));
        }
        if self.lengths.contains(&0) {
            return Err(CliError::Schema("sequence lengths must be at least 1".into()));
        }
        if self.sequences_per_length == 0 {
            return Err(CliError::Schema(
                "sequences_per_length must be at least 1".into(),
            ));
        }

        let mut config = RbConfig::new(
            protocol,
            group,
            self.lengths.clone(),
            self.sequences_per_length,
            self.seed,
        );
        config.shots = self.shots;
        config.sequence_mode = match self.sequence_mode {
            SequenceModeName::Sampled => SequenceMode::Sampled,
            SequenceModeName::Exhaustive => SequenceMode::Exhaustive,
            SequenceModeName::Averaged => SequenceMode::Averaged,
        };
        if let Some(spec) = &self.noise {
            config.noise = spec.to_model()?;
            let noise_n = config.noise.n_qubits().map_err(schema)?;
            if noise_n != n {
                return Err(CliError::Schema(format!(
                    "noise acts on {noise_n} qubit(s) but the group has {n}"
                )));
            }
        }
        if let Some(spec) = &self.target_noise {
            if self.protocol != ProtocolName::Interleaved {
                return Err(CliError::Schema(
                    "target_noise is only meaningful for the interleaved protocol".into(),
                ));
            }
            let model = spec.to_model()?;
            let tn = model.n_qubits().map_err(schema)?;
            if tn != n {
                return Err(CliError::Schema(format!(
                    "target_noise acts on {tn} qubit(s) but the group has {n}"
                )));
            }
            config.target_noise = Some(model);
        }
        if let Some(spam) = &self.spam {
            for (part, spec) in [("prep", &spam.prep), ("meas", &spam.meas)] {
                if let Some(spec) = spec {
                    let model = spec.to_model()?;
                    let sn = model.n_qubits().map_err(schema)?;
                    if sn != n {
                        return Err(CliError::Schema(format!(
                            "spam.{part} acts on {sn} qubit(s) but the group has {n}"
                        )));
                    }
                    match part {
                        "prep" => config.spam.prep = model,
                        _ => config.spam.meas = model,
                    }
                }
            }
        }
        if let Some(bits) = &self.initial_bits {
            if bits.len() != n {
                return Err(CliError::Schema(format!(
                    "initial_bits has {} entries for {} qubit(s)",
                    bits.len(),
                    n
                )));
            }
            config.initial_bits = bits.clone();
        }
        if let Some(labels) = &self.observables {
            let mut observables = Vec::with_capacity(labels.len());
            for label in labels {
                observables.push(parse_observable(label, n)?);
            }
            config.observables = observables;
        }
        if let Protocol::Interleaved { target } = protocol {
            let order = GateSetGroup::generate(group).map_err(schema)?.order();
            if target >= order {
                return Err(CliError::Schema(format!(
                    "target id {target} is out of range for a group of order {order}"
                )));
            }
        }
        Ok(config)
    }

    fn protocol_value(&self) -> Result<Protocol> {
        if self.target.is_some() && self.protocol != ProtocolName::Interleaved {
            return Err(CliError::Schema(
                "target is only meaningful for the interleaved protocol".into(),
            ));
        }
        Ok(match self.protocol {
            ProtocolName::Standard => Protocol::Standard,
            ProtocolName::SimultaneousFirst => Protocol::Simultaneous(SimExperiment::First),
            ProtocolName::SimultaneousSecond => Protocol::Simultaneous(SimExperiment::Second),
            ProtocolName::SimultaneousJoint => Protocol::Simultaneous(SimExperiment::Joint),
            ProtocolName::Correlated => Protocol::Correlated,
            ProtocolName::Interleaved => {
                let target = self.target.ok_or_else(|| {
                    CliError::Schema("the interleaved protocol requires a target gate id".into())
                })?;
                Protocol::Interleaved { target }
            }
            ProtocolName::Shadow => Protocol::Shadow,
        })
    }

    fn check_group_pairing(&self) -> Result<()> {
        let allowed: &[GroupName] = match self.protocol {
            ProtocolName::Standard | ProtocolName::Interleaved | ProtocolName::Shadow => {
                &[GroupName::C1, GroupName::C2]
            }
            ProtocolName::SimultaneousFirst => &[GroupName::C1xI],
            ProtocolName::SimultaneousSecond => &[GroupName::IxC1],
            ProtocolName::SimultaneousJoint | ProtocolName::Correlated => &[GroupName::C1xC1],
        };
        if allowed.contains(&self.group) {
            Ok(())
        } else {
            let names: Vec<&str> = allowed.iter().map(GroupName::as_str).collect();
            Err(CliError::Schema(format!(
                "protocol {} requires group {} but the config names {}",
                self.protocol.as_str(),
                names.join(" or "),
                self.group.as_str()
            )))
        }
    }
}

/// Parses an observable label against the qubit count: `"survival"`,
/// `"up<q>"` or a string of Pauli letters with qubit 0 first.
pub fn parse_observable(label: &str, n: usize) -> Result<ObservableSpec> {
    if label == "survival" {
        return Ok(ObservableSpec::Survival);
    }
    if let Some(rest) = label.strip_prefix("up") {
        if let Ok(qubit) = rest.parse::<usize>() {
            if qubit >= n {
                return Err(CliError::Schema(format!(
                    "observable {label:?} addresses qubit {qubit} but the group has {n} qubit(s)"
                )));
            }
            return Ok(ObservableSpec::UpProbability { qubit });
        }
    }
    let string = PauliString::from_letters(label).map_err(|_| {
        CliError::Schema(format!(
            "unknown observable {label:?}; expected \"survival\", \"up<q>\" or Pauli letters"
        ))
    })?;
    if string.n_qubits() != n {
        return Err(CliError::Schema(format!(
            "observable {label:?} has {} letter(s) for {} qubit(s)",
            string.n_qubits(),
            n
        )));
    }
    Ok(ObservableSpec::PauliExpectation(label.to_string()))
}
