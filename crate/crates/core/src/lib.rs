//! Nonconforming finite elements for bi-elastic source, eigenvalue and elastic transmission
//! eigenvalue problems on polygonal domains.

pub mod assembly;
pub mod checks;
pub mod coefficient;
pub mod eigen;
pub mod error;
pub mod harness;
pub mod jet;
pub mod mesh;
pub mod polybasis;
pub mod quadrature;
pub mod sparse;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
