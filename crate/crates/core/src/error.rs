use thiserror::Error;

/// Errors produced by the geometry, assembly and solver stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial degree {0} out of supported range 1..=5")]
    DegreeOutOfRange(usize),
    #[error("quadrature degree {0} beyond available rules")]
    QuadratureDegree(usize),
    #[error("non-finite value at node ({0}, {1})")]
    NonFiniteValue(f64, f64),
    #[error("no root in step-length search interval on element {elem} (mesh too coarse for the geometry)")]
    NoRootInInterval { elem: usize },
    #[error("zero search direction on element {elem}")]
    ZeroDirection { elem: usize },
    #[error("zero gradient of linearized level set on cut element {0}")]
    DegenerateCut(usize),
    #[error("non-positive mapping Jacobian det {det:.3e} on element {elem}")]
    NonPositiveJacobian { elem: usize, det: f64 },
    #[error("matrix not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("iterative solver failed to converge within {0} iterations")]
    NoConvergence(usize),
    #[error("mapping discontinuity {0:.3e} across the cut-layer boundary")]
    Discontinuity(f64),
    #[error("invalid mesh file: {0}")]
    MeshFormat(String),
    #[error("manufactured case {name} rejected: {detail}")]
    CaseInvalid { name: String, detail: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
