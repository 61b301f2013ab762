use thiserror::Error;

use crate::asymptotics::SpectralEstimate;
use crate::resolvent::ResolventCertificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {0} has non-positive measure")]
    NonPositiveMeasure(usize),
    #[error("edge ({0}, {1}) has non-positive weight")]
    NonPositiveWeight(usize, usize),
    #[error("edge ({0}, {1}) appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("edge at vertex {0} is a self-loop")]
    SelfLoop(usize),
    #[error("vertex index {index} out of range (graph has {len} vertices)")]
    VertexOutOfRange { index: usize, len: usize },
    #[error("domain interior is empty")]
    EmptyInterior,
    #[error("field size mismatch: expected {expected}, got {got}")]
    FieldMismatch { expected: usize, got: usize },
    #[error("Dirichlet boundary condition requires boundary data")]
    MissingBoundaryData,
    #[error("whole-space boundary condition on a domain with {0} boundary elements")]
    BoundaryOnWholeSpace(usize),
    #[error("truncation level must be positive, got {0}")]
    NonPositiveK(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resolvent solve did not converge: gap {gap:e} after {iterations} iterations")]
    NotConverged {
        gap: f64,
        iterations: usize,
        best: Box<ResolventCertificate>,
    },
    #[error("flow step {step} failed: {source}")]
    FlowStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("dual field infeasible: {0}")]
    InfeasibleDual(String),
    #[error("steady state not reached by horizon {0}")]
    NotReached(f64),
    #[error("trajectories are on different time grids or domains")]
    GridMismatch,
    #[error("field is identically zero")]
    ZeroField,
    #[error("field has nonzero mean {0:e}")]
    NonZeroMean(f64),
    #[error("subset budget exhausted before local search converged")]
    BudgetExceeded { best: Box<SpectralEstimate> },
    #[error("trajectory has not gone extinct")]
    NotExtinct,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unsupported image format: {0}")]
    UnsupportedImageFormat(String),
    #[error("no strategy registered under `{0}`")]
    UnknownStrategy(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
