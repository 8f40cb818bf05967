use num_complex::Complex64 as C;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid anchors: {0}")]
    InvalidAnchors(String),
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("invalid connectivity matrix: {0}")]
    InvalidConnectivity(String),
    #[error("empty continuum")]
    EmptyContinuum,
    #[error("anchor e{index} is {distance:.3e} away from every arc")]
    AnchorNotOnContinuum { index: usize, distance: f64 },

    #[error("Q evaluated within the branch tolerance of pole {0}")]
    PoleEvaluation(C),
    #[error("branch tracking failed near {0}")]
    BranchJump(C),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("Newton diverged after {iterations} iterations (residual {residual:.3e})")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("{0} is not a critical point")]
    NotCritical(C),

    #[error("trajectory step collapsed at {0}")]
    StepCollapse(C),
    #[error("critical graph inconsistent: {0}")]
    GraphInconsistency(String),
    #[error("no spectrum arcs off the real axis")]
    DegenerateSpectrum,

    #[error("collocation matrix ill-conditioned (estimate {0:.3e})")]
    IllConditioned(f64),
    #[error("field evaluated on the support at {0}")]
    EvaluationOnSupport(C),
    #[error("external field invalid: {0}")]
    FieldMismatch(String),
    #[error("Dirichlet grid too coarse (half-grid change {0:.3e})")]
    GridTooCoarse(f64),
    #[error("found {found} stagnation points, expected {expected}")]
    CountMismatch { found: usize, expected: usize },

    #[error("descent left the connectivity class")]
    ClassEscape,
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
