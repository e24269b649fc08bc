//! Spiralling ideal triangulations of hyperbolic surfaces, their shear
//! coordinates, and the explicit constants bounding those shears.

pub mod error;
pub mod constants;
pub mod cusped;
pub mod decomposition;
pub mod hyperbolic;
pub mod lorentz;
pub mod report;
pub mod surface;
pub mod triangulation;

pub use error::{Error, GeometryError, Result};
