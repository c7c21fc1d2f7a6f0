//! Positive definite functions on finitely generated abelian groups, their
//! spectral measures on the dual, the GNS representation, and the vanishing of
//! 1-cohomology and reduced 1-cohomology of that representation.

pub mod bochner;
pub mod cohomology;
pub mod error;
pub mod gns;
pub mod group;
pub mod measure;

pub use cohomology::{Cocycle, ClassificationReport, Verdict};
pub use error::{Error, Result};
pub use group::{Complex64, DualPoint, GroupDescriptor, GroupElement};
pub use measure::{Atom, Decomposition, DualMeasure, GridCell, MeasureSpec};
