use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("rank {k} out of range for dimension {dim}")]
    RankOutOfRange { k: usize, dim: usize },

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid Pauli symbol {0} (expected 0..=3)")]
    InvalidPauliSymbol(u8),

    #[error("unsupported qubit count {0}")]
    QubitCount(usize),

    #[error("eigensolver did not converge within {iterations} iterations (d = {dim}, off-diagonal mass {residual:e})")]
    EigenNonConvergence { dim: usize, iterations: usize, residual: f64 },

    #[error("measurement tr(X A) has imaginary part {0:e}; design and matrix fields disagree")]
    ComplexMeasurement(f64),

    #[error("outcome probability {p} outside [0, 1]: state is not a density matrix")]
    InvalidState { p: f64 },

    #[error("this operation requires a {0} design")]
    WrongDesign(&'static str),

    #[error("level alpha = {0} must lie in (0, 1)")]
    InvalidAlpha(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least {needed} measurements, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("re-averaging needs a full-basis batch: {0}")]
    NotFullBasis(String),

    #[error("paired statistic needs draw i and i + n/2 to share a design (first violation at i = {0})")]
    PairingViolated(usize),

    #[error("pilot and confidence batches must be independent (both have id {0:#x})")]
    SampleReuse(u64),

    #[error("proximal solver diverged: objective rose for {0} consecutive steps")]
    SolverDiverged(usize),

    #[error("calibration target {target} unreachable for {constant}: best coverage {best:.4} at {value}")]
    CalibrationUnreachable { constant: String, target: f64, best: f64, value: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
