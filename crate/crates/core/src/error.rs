use alloc::string::String;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("matrix is not symplectic (defect {defect:e})")]
    NotSymplectic { defect: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("subspace is not a graph over the target (W meets F nontrivially)")]
    GraphDegenerate,
    #[error("symplectic form degenerates on the subspace")]
    DegenerateRestriction,
    #[error("no spectral gap at the requested cut: {0}")]
    NoGap(String),
    #[error("not hyperbolic: {0}")]
    NotHyperbolic(String),
    #[error("itinerary is a proper power of a shorter word")]
    NotPrimitive,
    #[error("missing transition from orbit {from} to orbit {to}")]
    MissingTransition { from: u32, to: u32 },
    #[error("argument rationalization failed: {0}")]
    Rationalization(String),
    #[error("alignment did not converge within {0} iterations")]
    AlignmentStalled(usize),
    #[error("geometry violation: {0}")]
    Geometry(String),
    #[error("model too weak: {0}")]
    ModelTooWeak(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
