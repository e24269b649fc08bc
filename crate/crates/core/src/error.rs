use thiserror::Error;

use crate::hyperbolic::IsometryKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) is not in the upper half-plane")]
    InvalidPoint { x: f64, y: f64 },
    #[error("matrix determinant {0} is not positive")]
    NonPositiveDeterminant(f64),
    #[error("isometry is {0:?}, not hyperbolic")]
    NotHyperbolic(IsometryKind),
    #[error("isometry is not parabolic")]
    NotParabolic,
    #[error("isometry is {0:?} and has no boundary fixed point")]
    NoBoundaryFixedPoint(IsometryKind),
    #[error("coincident ideal points")]
    CoincidentPoints,
    #[error("triangles are not adjacent along the given edge")]
    NotAdjacent,
    #[error("edge must be oriented")]
    UnorientedEdge,
    #[error("geodesics do not intersect")]
    Disjoint,
    #[error("{what} out of domain: {value}")]
    OutOfDomain { what: &'static str, value: f64 },
}

/// Crate-level error.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("2g−2+n must be positive (got g={g}, n={n})")]
    InvalidSignature { g: u32, n: u32 },
    #[error("invalid pants graph: {0}")]
    InvalidGraph(String),
    #[error("invalid coordinates: {0}")]
    InvalidCoordinates(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("spiralling triangulation not flip-searchable")]
    NotFlipSearchable,
    #[error("{0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
