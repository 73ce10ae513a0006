use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed box: {0}")]
    MalformedBox(String),
    #[error("boxes {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("endpoint {value} is not dyadic at level {max_level}")]
    NonDyadic { value: String, max_level: u32 },
    #[error("region is not aligned to the level-{level} grid: {detail}")]
    Misaligned { level: u32, detail: String },
    #[error("|Q0| = {measure} exceeds 2^-{exponent} (bound (d-1)^2+1 with d = {d})")]
    MeasureBound { measure: String, exponent: u64, d: usize },
    #[error("epsilon {0} outside (0, 1/2]")]
    EpsilonRange(String),
    #[error("epsilon {0} is not a dyadic rational")]
    EpsilonNotDyadic(String),
    #[error("base box constrains {have} coordinates, configuration needs {need}")]
    TooFewCoordinates { have: usize, need: usize },
    #[error("translate of coordinate {0} wraps around the circle")]
    Wrap(usize),
    #[error("d = {d} exceeds the atom-mode cap {cap}; use the closed-form cell ledger")]
    AtomCap { d: usize, cap: usize },
    #[error("exponent p = {0} must exceed 1")]
    ExponentRange(String),
    #[error("no positive m solves the level-{j} bound: j^-2 (1+d-eps d)/2 = {half} is not below 1")]
    Unsolvable { j: usize, half: String },
    #[error("average over a null set")]
    NullSet,
    #[error("cell straddles atoms: {0}")]
    Straddle(String),
    #[error("collection violates nesting: {0}")]
    NotNested(String),
    #[error("schedule carries no growth descriptor")]
    NoGrowth,
    #[error("index {index} out of range (count {count})")]
    IndexRange { index: String, count: String },
    #[error("{0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
