use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::distribution::{EntryDistribution, EntryKind};
use super::lattice::Lattice;
use super::profile::BandProfile;
use super::sample::BandMatrixSample;
use super::shape::{ShapeFunction, ShapeKind};

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeParams {
    #[serde(default = "unit")]
    pub scale: f64,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams { scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    #[serde(default)]
    pub params: ShapeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    pub kind: EntryKind,
    #[serde(default)]
    pub complex: bool,
    #[serde(default)]
    pub delta: Option<f64>,
}

/// Serializable description of an ensemble:
/// `{d, N, W, shape: {kind, params}, dist: {kind, complex, delta}, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleDescriptor {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "W")]
    pub w: usize,
    pub shape: ShapeSpec,
    pub dist: DistSpec,
    pub seed: u64,
}

impl EnsembleDescriptor {
    pub fn new(d: usize, n: usize, w: usize, shape: ShapeKind, dist: EntryKind, complex: bool, seed: u64) -> Self {
        EnsembleDescriptor {
            d,
            n,
            w,
            shape: ShapeSpec {
                kind: shape,
                params: ShapeParams::default(),
            },
            dist: DistSpec {
                kind: dist,
                complex,
                delta: None,
            },
            seed,
        }
    }

    /// Mean-field case: box profile with `W = N`, so `σ²_xy = 1/N^d`.
    pub fn wigner(n: usize, dist: EntryKind, complex: bool, seed: u64) -> Self {
        EnsembleDescriptor::new(1, n, n, ShapeKind::Box, dist, complex, seed)
    }

    pub fn build(&self) -> Result<Ensemble> {
        let scoped = |e: Error| match e {
            Error::InvalidParameter { field, message } => Error::InvalidParameter {
                field: format!("ensemble.{field}"),
                message,
            },
            other => other,
        };
        let lattice = Lattice::new(self.d, self.n).map_err(scoped)?;
        let shape = ShapeFunction::new(self.shape.kind, self.d, self.shape.params.scale).map_err(scoped)?;
        let profile = BandProfile::new(lattice, self.w, shape).map_err(scoped)?;
        let dist = EntryDistribution::new(self.dist.kind, self.dist.complex, self.dist.delta).map_err(scoped)?;
        Ok(Ensemble {
            profile: Arc::new(profile),
            dist,
            seed: self.seed,
        })
    }
}

/// A built profile together with its entry law and base seed.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub profile: Arc<BandProfile>,
    pub dist: EntryDistribution,
    pub seed: u64,
}

impl Ensemble {
    pub fn new(profile: BandProfile, dist: EntryDistribution, seed: u64) -> Self {
        Ensemble {
            profile: Arc::new(profile),
            dist,
            seed,
        }
    }

    pub fn sample(&self, realization_index: u64) -> BandMatrixSample {
        BandMatrixSample::sample(self.profile.clone(), self.dist, self.seed, realization_index)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Ensemble {
            seed,
            ..self.clone()
        }
    }
}
