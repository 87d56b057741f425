//! Periodic lattice, band profile and sampling of band matrices.

mod descriptor;
mod distribution;
mod lattice;
mod profile;
mod sample;
mod shape;

pub use descriptor::{DistSpec, Ensemble, EnsembleDescriptor, ShapeParams, ShapeSpec};
pub use distribution::{EntryDistribution, EntryKind};
pub use lattice::Lattice;
pub use profile::BandProfile;
pub use sample::BandMatrixSample;
pub use shape::{FactorMoments, ShapeFunction, ShapeKind};
