use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cannot parse Pauli word {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error("generators do not commute: {0} and {1}")]
    Contradiction(String, String),
    #[error("inconsistent group: generates w^{0} times identity")]
    Inconsistent(u32),
    #[error("operator {0} is not measurable (its N-th power is not the identity)")]
    NotMeasurable(String),
    #[error("lattice dimensions {0}x{1} do not admit the 3-coloring (need multiples of 3)")]
    ColoringInfeasible(usize, usize),
    #[error("degenerate lattice: {0}")]
    Degenerate(String),
    #[error("no odd-length path between vertices {0} and {1} (same sublattice)")]
    OddPathUnavailable(usize, usize),
    #[error("unknown {kind} index {index}")]
    Unknown { kind: &'static str, index: usize },
    #[error("check on edge {0} has been removed")]
    CheckRemoved(usize),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("defect lines require odd-length paths (got length {0})")]
    OddLengthRequired(usize),
    #[error("defect line conflicts with an existing line at edge {0}")]
    DefectConflict(usize),
    #[error("cannot complete open path into a contractible loop: {0}")]
    Completion(String),
    #[error("inconsistent schedule: {0}")]
    Schedule(String),
    #[error("six-round schedule cannot infer stabilizers across removed 2-checks")]
    InferenceImpossible,
    #[error("at least {need} defect lines required, found {found}")]
    InsufficientDefects { need: usize, found: usize },
    #[error("syndrome graph construction failed: {0}")]
    Graph(String),
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

pub type Result<T> = std::result::Result<T, Error>;
