use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    DimensionMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("matrix dimension {dim} is not a power of two")]
    NotPowerOfTwo { dim: usize },
    #[error("a channel needs at least one Kraus operator")]
    EmptyKraus,
    #[error("invalid Pauli index {index} for {n} qubit(s)")]
    InvalidPauliIndex { index: usize, n: usize },
    #[error("invalid Pauli letter '{letter}' (expected I, X, Y or Z)")]
    InvalidPauliLetter { letter: char },
    #[error("probabilities must be nonnegative and sum to one (defect {defect:.3e})")]
    InvalidProbabilities { defect: f64 },
    #[error("channel is not trace preserving (defect {defect:.3e})")]
    NotTracePreserving { defect: f64 },
    #[error("channel is not completely positive (minimum Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },
    #[error("parameter {name} = {value} is outside {range}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("matrix does not act as a signed Pauli permutation (column {column})")]
    NotSignedPermutation { column: usize },
    #[error("an empty gate sequence has no inverse")]
    EmptySequence,
    #[error("sequence length must be at least 1")]
    ZeroLength,
    #[error("element index {index} out of range for a group of order {order}")]
    ElementOutOfRange { index: usize, order: usize },
    #[error("group closure exceeded the element limit {limit}")]
    ClosureLimitExceeded { limit: usize },
    #[error("operation not supported for group kind {kind}")]
    UnsupportedGroup { kind: String },
    #[error("qubit counts {na} and {nb} do not match")]
    QubitCountMismatch { na: usize, nb: usize },
    #[error("twirled map does not commute with the group action (defect {defect:.3e})")]
    NotGroupCovariant { defect: f64 },
    #[error(
        "twirled map is not a combination of the invariant projectors (residual {residual:.3e}); \
         the group acts with multiplicity on this space"
    )]
    ProjectorResidual { residual: f64 },
    #[error("decay rate alpha[{index}] = {value:.3e} must be positive for inversion")]
    NonPositiveAlpha { index: usize, value: f64 },
    #[error("no CPTP fixed-subspace-weight parametrization exists for the supplied decay rates")]
    NoAdmissibleEpsilon,
    #[error("exhaustive enumeration of {count} sequences exceeds the limit {limit}")]
    ExhaustiveTooLarge { count: u128, limit: u128 },
    #[error("observable {observable} is not diagonal in the computational basis; it cannot be estimated from sampled bitstrings")]
    ObservableNotSampleable { observable: String },
    #[error("{count} records at length {m} are fewer than the {required} required")]
    InsufficientRecords {
        m: usize,
        count: usize,
        required: usize,
    },
    #[error("fit did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("fidelity reporting needs a converged single-decay fit (got model {model})")]
    UnsupportedFitReport { model: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
