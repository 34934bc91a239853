use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("sample count mismatch: expected {expected}, got {got}")]
    SampleCount { expected: usize, got: usize },

    #[error("reflection center {center} is off-grid; nearest admissible center is {nearest}")]
    OffGridCenter { center: f64, nearest: f64 },

    #[error("reflection about {center} moves the support outside the horizon")]
    ReflectionOutsideHorizon { center: f64 },

    #[error("time {t} is not a cell edge of the grid")]
    OffGridTime { t: f64 },

    #[error("{invariant} violated at index {index}")]
    WindowInvariant { invariant: &'static str, index: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("modulation b = {b} outside (0, {max}]")]
    ModulationOutOfRange { b: f64, max: f64 },

    #[error("invalid periodic specification: {0}")]
    InvalidPeriodic(String),

    #[error("unsatisfiable request: {0}")]
    Unsatisfiable(String),

    #[error("invalid node set: {0}")]
    InvalidNodes(String),

    #[error("invalid frequency grid: {0}")]
    InvalidFrequencies(String),

    #[error("autocorrelation not realizable: {0}")]
    NotRealizable(String),

    #[error("segment length {len} exceeds the enumeration limit {max}")]
    SegmentTooLong { len: usize, max: usize },

    #[error("inconsistent measurements: {0}")]
    Inconsistent(String),

    #[error("ambiguity violation: {0}")]
    AmbiguityViolation(String),

    #[error("separable input: propagation broken at node {node}")]
    PropagationBroken { node: i64 },

    #[error("window division amplifies noise beyond the conditioning limit ({cond:.3e} > {limit:.3e})")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("a > B unsupported for reconstruction (a = {a}, B = {b})")]
    WideStep { a: f64, b: f64 },

    #[error("orientation search exceeded {0} branches")]
    BranchLimit(usize),

    #[error("forge precondition failed: {0}")]
    ForgePrecondition(String),

    #[error("family has {count} instances, above the limit {limit}")]
    FamilyTooLarge { count: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}
