use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate model: linear response system is numerically singular")]
    DegenerateModel,

    #[error("vanishing reference amplitude: r_L = 0, circular phase difference is undefined")]
    VanishingReferenceAmplitude,

    #[error("infinite cooperativity: gamma_sp = 0")]
    InfiniteCooperativity,

    #[error("empty channel: intensity pair {0} sums to a non-positive value")]
    EmptyChannel(&'static str),

    #[error("empty field: coherence matrix has non-positive trace")]
    EmptyField,

    #[error("fidelity target must be a unit Stokes vector (|S| = {0})")]
    NonUnitTarget(f64),

    #[error("non-invertible mixture: p_up = {0} must lie in (0, 1]")]
    NonInvertibleMixture(f64),

    #[error("unphysical state: |S| = {0} exceeds 1")]
    UnphysicalState(f64),

    #[error("invalid Jones vector: {0}")]
    InvalidJones(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("invalid occupation model: {0}")]
    InvalidOccupation(String),

    #[error("quadrature order must be at least 1")]
    InvalidQuadratureOrder,

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("frequency grid is not strictly increasing at index {0}")]
    NonMonotoneGrid(usize),

    #[error("invalid scan specification: {0}")]
    InvalidScan(String),

    #[error("Fock cutoff must be at least 1 (got {0})")]
    InvalidCutoff(usize),

    #[error("Liouvillian dimension {dim} exceeds the configured cap {cap}")]
    LiouvillianTooLarge { dim: usize, cap: usize },

    #[error("non-unique steady state: constrained Liouvillian is singular")]
    NonUniqueSteadyState,

    #[error("drive amplitude must be non-zero")]
    ZeroDrive,

    #[error("corrupt dataset: {0}")]
    CorruptDataset(String),

    #[error("invalid fit problem: {0}")]
    InvalidProblem(String),

    #[error("parameter {name} = {value} outside bounds [{lo}, {hi}]")]
    OutOfBounds { name: String, value: f64, lo: f64, hi: f64 },

    #[error("objective is not finite at the initial point")]
    NonFiniteObjective,

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("coincident Zeeman anchors at B = {0} T")]
    CoincidentAnchors(f64),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    Csv { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
