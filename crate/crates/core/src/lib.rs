//! Cluster detection on lattices via percolation: thresholded upper level
//! sets, scan statistics, planted alternatives and Monte Carlo risk curves.

pub mod detectors;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod numeric;
pub mod par;
pub mod percolation;
pub mod planting;
pub mod rng;
pub mod theory;
pub mod unionfind;

pub use detectors::{DetectorResult, DetectorSpec, Statistic};
pub use distributions::{FamilyKind, FamilySpec};
pub use error::{Error, Result};
pub use lattice::{Boundary, GridSpec, NodeIndex, Region};
pub use par::Execution;
pub use percolation::{Field, OpenConfiguration};
pub use planting::ShapeSpec;
