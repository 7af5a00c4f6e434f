//! Finite approximation of topological dynamical systems in the
//! Gromov-Hausdorff sense.

pub mod approx;
pub mod certificate;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod gh;
pub mod isometry;
pub mod json;
pub mod measures;
pub mod metric;
pub mod mis;
pub mod point;

pub use error::{Error, Result};
