//! Simulation toolkit for random band matrices on periodic lattices:
//! sampling, Chebyshev propagation, quantum diffusion, nonbacktracking
//! powers, pairing combinatorics and spectral edge experiments.

pub mod chebyshev;
pub mod diagrams;
pub mod diffusion;
pub mod error;
pub mod limit;
pub mod ensemble;
pub mod nonbacktracking;
pub mod operator;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use parallel::Exec;
