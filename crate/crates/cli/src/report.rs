//! Structured result bundles.
//!
//! Every derived quantity in a report carries the formula it came from,
//! drawn from the fixed registry in [`formulas`], so downstream tooling
//! can match on exact strings and no number leaves the tool unexplained.
//! Bundles serialize to TOML with a stable field order, which keeps
//! fixed-seed runs byte-identical.

use serde::Serialize;

use rbsim_core::fit::{DecayModel, FidelityReport, FitResult};
use rbsim_core::protocols::{CorrelatedOutcome, DecayDataset, InterleavedOutcome};
use rbsim_core::twirl::delta_alpha;

use crate::error::{simulation, Result};
use crate::io::DecayRow;

/// The fixed registry of formula strings reports may cite.
pub mod formulas {
    /// Single-exponential decay model.
    pub const SINGLE_EXP: &str = "F(m) = A p^m + B";
    /// Decay model whose rate slot holds `2 Fbar - 1` directly.
    pub const DIRECT_FIDELITY: &str = "F(m) = A (2 Fbar - 1)^m + B";
    /// Sum-of-exponentials decay model.
    pub const MULTI_EXP: &str = "F(m) = B + sum_k A_k p_k^m";
    /// Shadow correlation decay model.
    pub const POWER: &str = "k(m) = c q^(m - 1)";
    /// Average gate fidelity of a depolarizing parameter.
    pub const AVG_FIDELITY: &str = "Fbar = p + (1 - p) / d";
    /// Average error rate of a depolarizing parameter.
    pub const ERROR_RATE: &str = "r = (1 - p) (d - 1) / d";
    /// Rescaling from the gate-set level to the physical-rotation level.
    pub const PHYSICAL_RESCALE: &str = "r_phys = r / 1.875";
    /// Multiplicativity defect of the joint two-qubit decay rate.
    pub const DELTA_ALPHA: &str = "delta_alpha = alpha3 - alpha1 alpha2";
    /// Per-subspace decay rates of composed fixed-weight channels.
    pub const EPSILON_INVERSION: &str = "alpha_j = prod_S (1 + eps_S (r_S(j) - 1))";
    /// Interleaved point estimate of the target gate error.
    pub const INTERLEAVED_ESTIMATE: &str = "r_est = (d - 1) (1 - pC / p) / d";
    /// Interval half-width around the interleaved estimate.
    pub const INTERLEAVED_BOUND: &str = "E = min((d - 1) (|p - pC/p| + (1 - p)) / d, \
         2 (d^2 - 1) (1 - p) / (p d^2) + 4 sqrt(1 - p) sqrt(d^2 - 1) / p)";

    /// Every formula string the reports may cite.
    pub const REGISTRY: [&str; 11] = [
        SINGLE_EXP,
        DIRECT_FIDELITY,
        MULTI_EXP,
        POWER,
        AVG_FIDELITY,
        ERROR_RATE,
        PHYSICAL_RESCALE,
        DELTA_ALPHA,
        EPSILON_INVERSION,
        INTERLEAVED_ESTIMATE,
        INTERLEAVED_BOUND,
    ];
}

/// Name and version of the emitting tool.
#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> ToolInfo {
        ToolInfo {
            name: "rbsim",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

/// One fitted parameter with its standard error.
#[derive(Clone, Debug, Serialize)]
pub struct ParamRow {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

/// A serialized fit: model identity, diagnostics and parameters.
#[derive(Clone, Debug, Serialize)]
pub struct FitBlock {
    /// Observable (or dataset stage) the fit belongs to.
    pub observable: String,
    pub model: String,
    pub formula: String,
    pub converged: bool,
    pub iterations: usize,
    pub rank_deficient: bool,
    pub residual_norm: f64,
    pub params: Vec<ParamRow>,
}

/// Fidelity figures derived from a fitted decay rate.
#[derive(Clone, Debug, Serialize)]
pub struct FidelityBlock {
    pub formula_avg_fidelity: String,
    pub formula_error_rate: String,
    pub p: f64,
    pub p_stderr: f64,
    pub avg_fidelity: f64,
    pub avg_fidelity_margin: f64,
    pub error_rate: f64,
    pub error_rate_margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_physical: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub physical_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub physical_fidelity_margin: Option<f64>,
}

/// A labeled scalar, used for per-subspace rates and weights.
#[derive(Clone, Debug, Serialize)]
pub struct LabeledValue {
    pub label: String,
    pub value: f64,
}

/// Derived quantities of a correlated run.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelatedBlock {
    pub formula_delta_alpha: String,
    pub formula_epsilon: String,
    pub delta_alpha: f64,
    /// Set when both inversion roots were admissible and the one
    /// continuous with zero noise was chosen.
    pub root_ambiguous: bool,
    pub alphas: Vec<LabeledValue>,
    pub epsilons: Vec<LabeledValue>,
}

/// Derived quantities of an interleaved run.
#[derive(Clone, Debug, Serialize)]
pub struct InterleavedBlock {
    pub formula_estimate: String,
    pub formula_bound: String,
    pub p: f64,
    pub p_interleaved: f64,
    pub r_est: f64,
    pub bound: f64,
    pub bound_simple: f64,
    pub bound_refined: f64,
}

/// Provenance of the numbers in a bundle. The digest covers the input
/// file bytes (configuration or dataset); the seed is present when the
/// bundle came out of a simulation run.
#[derive(Clone, Debug, Serialize)]
pub struct SourceInfo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub input_sha256: String,
}

/// The complete report: decay data, fits and derived quantities.
#[derive(Clone, Debug, Serialize)]
pub struct ReportBundle {
    pub tool: ToolInfo,
    pub source: SourceInfo,
    pub decay: Vec<DecayRow>,
    pub fits: Vec<FitBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<FidelityBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correlated: Option<CorrelatedBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interleaved: Option<InterleavedBlock>,
}

/// The command line spelling of a decay model.
pub fn model_name(model: DecayModel) -> String {
    match model {
        DecayModel::SingleExp => "single-exp".into(),
        DecayModel::DirectFidelity => "direct-fidelity".into(),
        DecayModel::MultiExp { .. } => "multi-exp".into(),
        DecayModel::Power => "power".into(),
    }
}

/// The registry formula of a decay model.
pub fn model_formula(model: DecayModel) -> &'static str {
    match model {
        DecayModel::SingleExp => formulas::SINGLE_EXP,
        DecayModel::DirectFidelity => formulas::DIRECT_FIDELITY,
        DecayModel::MultiExp { .. } => formulas::MULTI_EXP,
        DecayModel::Power => formulas::POWER,
    }
}

/// Serializes a fit result under the given dataset label.
pub fn fit_block(observable: &str, fit: &FitResult) -> FitBlock {
    let params = fit
        .names
        .iter()
        .zip(&fit.values)
        .zip(&fit.stderr)
        .map(|((name, value), stderr)| ParamRow {
            name: name.clone(),
            value: *value,
            stderr: *stderr,
        })
        .collect();
    FitBlock {
        observable: observable.to_string(),
        model: model_name(fit.model),
        formula: model_formula(fit.model).to_string(),
        converged: fit.converged,
        iterations: fit.iterations,
        rank_deficient: fit.rank_deficient,
        residual_norm: fit.residual_norm,
        params,
    }
}

pub fn fidelity_block(report: &FidelityReport) -> FidelityBlock {
    FidelityBlock {
        formula_avg_fidelity: formulas::AVG_FIDELITY.to_string(),
        formula_error_rate: formulas::ERROR_RATE.to_string(),
        p: report.p,
        p_stderr: report.p_stderr,
        avg_fidelity: report.avg_fidelity,
        avg_fidelity_margin: report.avg_fidelity_margin,
        error_rate: report.error_rate,
        error_rate_margin: report.error_rate_margin,
        formula_physical: report
            .physical_fidelity
            .map(|_| formulas::PHYSICAL_RESCALE.to_string()),
        physical_fidelity: report.physical_fidelity,
        physical_fidelity_margin: report.physical_fidelity_margin,
    }
}

pub fn correlated_block(outcome: &CorrelatedOutcome) -> Result<CorrelatedBlock> {
    let delta = delta_alpha(&outcome.alphas).map_err(simulation)?;
    let labeled = |labels: &[String], values: &[f64]| {
        labels
            .iter()
            .zip(values)
            .map(|(label, value)| LabeledValue {
                label: label.clone(),
                value: *value,
            })
            .collect::<Vec<_>>()
    };
    Ok(CorrelatedBlock {
        formula_delta_alpha: formulas::DELTA_ALPHA.to_string(),
        formula_epsilon: formulas::EPSILON_INVERSION.to_string(),
        delta_alpha: delta,
        root_ambiguous: outcome.epsilons.root_ambiguous,
        alphas: labeled(&outcome.alphas.labels, &outcome.alphas.values),
        epsilons: labeled(&outcome.epsilons.labels, &outcome.epsilons.values),
    })
}

pub fn interleaved_block(outcome: &InterleavedOutcome) -> InterleavedBlock {
    InterleavedBlock {
        formula_estimate: formulas::INTERLEAVED_ESTIMATE.to_string(),
        formula_bound: formulas::INTERLEAVED_BOUND.to_string(),
        p: outcome.p,
        p_interleaved: outcome.p_interleaved,
        r_est: outcome.estimate.r_est,
        bound: outcome.estimate.bound,
        bound_simple: outcome.estimate.bound_simple,
        bound_refined: outcome.estimate.bound_refined,
    }
}

/// Decay rows echoing a dataset, in cell order.
pub fn decay_rows(dataset: &DecayDataset) -> Vec<DecayRow> {
    dataset
        .cells
        .iter()
        .map(|cell| DecayRow {
            observable: cell.observable.clone(),
            m: cell.m,
            mean: cell.mean,
            variance: cell.variance,
            count: cell.count,
        })
        .collect()
}

/// One estimated correlation point of a shadow report.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowPoint {
    pub m: usize,
    pub k_hat: f64,
    /// Analytic model value, present when a noise spec was provided.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<f64>,
}

/// Median-of-means shadow estimates with the optional decay fit.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowReport {
    pub probe: String,
    pub alpha: f64,
    pub batch_size: usize,
    pub batches: usize,
    pub tool: ToolInfo,
    pub source: SourceInfo,
    pub estimates: Vec<ShadowPoint>,
    /// Decay fit over the estimates; absent with fewer than three
    /// distinct lengths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
}

/// What a simulation run wrote and under which inputs, with no
/// timestamps so fixed-seed runs stay byte-identical.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub protocol: String,
    pub group: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Artifact file names, relative to the output directory.
    pub artifacts: Vec<String>,
    pub tool: ToolInfo,
}

/// Serializes a bundle to TOML text.
pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(simulation)
}
