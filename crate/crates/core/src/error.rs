use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("symbolic window exhausted: needed radius {needed}, have {available}")]
    WindowExhausted { needed: i64, available: i64 },
    #[error("matrix is not invertible over the torus (det = {det})")]
    NonInvertible { det: i64 },
    #[error("points belong to different systems")]
    MixedSystems,
    #[error("oracle is not compatible with the system: {0}")]
    IncompatibleOracle(String),
    #[error("operation not supported by this oracle: {0}")]
    UnsupportedOracle(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no probe accepted in B_{n}(x, {r}) after {attempts} attempts")]
    NoProbeAccepted { n: usize, r: f64, attempts: usize },
    #[error("scale {scale:e} below resolution floor {floor:e}")]
    ScaleUnderflow { scale: f64, floor: f64 },
    #[error("empty schedule")]
    EmptySchedule,
    #[error("conditioning atom has zero mass")]
    ZeroMassAtom,
    #[error("atom budget exceeded: {atoms} > {budget}")]
    AtomBudgetExceeded { atoms: f64, budget: usize },
    #[error("no epsilon level reached {floor} hits (best: {best})")]
    HitStarvation { floor: usize, best: usize },
    #[error("incompatible partition kinds: {0}")]
    IncompatiblePartitions(String),
    #[error("no k <= {k_max} satisfies the refinement inequality at level {level}")]
    SearchExhausted { level: usize, k_max: usize, residuals: Vec<f64> },
    #[error("epsilon {0} out of range: need 0 < 2*sqrt(eps) < 1")]
    EpsOutOfRange(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no candidate passed the admission test (tightest failing n = {tightest_n:?})")]
    EmptyCloud { tightest_n: Option<usize> },
    #[error("need at least {needed} scales, got {got}")]
    TooFewScales { needed: usize, got: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("zero empirical mass at scale {0}")]
    MassStarvation(f64),
    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("task failed: {0}")]
    TaskFailed(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
