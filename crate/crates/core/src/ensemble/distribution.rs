use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Gaussian,
    Rademacher,
    #[serde(alias = "uniform")]
    UniformSymmetric,
}

/// Law of the normalized entries `A_xy` (zero mean, unit variance, symmetric).
///
/// Complex entries are `(X + iY)/√2` with independent real parts of the same
/// kind. Diagonal entries always use the real law. With `truncation_delta`
/// set, entries with `|A| > M^δ` are replaced by zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryDistribution {
    pub kind: EntryKind,
    pub complex: bool,
    pub truncation_delta: Option<f64>,
}

impl EntryDistribution {
    pub fn new(kind: EntryKind, complex: bool, truncation_delta: Option<f64>) -> Result<Self> {
        if let Some(delta) = truncation_delta {
            if !(delta.is_finite() && delta >= 0.0) {
                return Err(Error::invalid("dist.delta", "truncation exponent must be finite and ≥ 0"));
            }
        }
        Ok(EntryDistribution {
            kind,
            complex,
            truncation_delta,
        })
    }

    pub fn real(kind: EntryKind) -> Self {
        EntryDistribution {
            kind,
            complex: false,
            truncation_delta: None,
        }
    }

    pub fn hermitian(kind: EntryKind) -> Self {
        EntryDistribution {
            kind,
            complex: true,
            truncation_delta: None,
        }
    }

    /// Recorded tail constants `(α, β)` with `P(|A| > ξ) ≤ β e^{-ξ^α}`.
    pub fn tail_constants(&self) -> (f64, f64) {
        match (self.kind, self.complex) {
            (EntryKind::Gaussian, false) => (1.0, 2.0 * 0.5f64.exp()),
            (EntryKind::Gaussian, true) => (1.0, 0.25f64.exp()),
            (EntryKind::Rademacher, _) => (1.0, std::f64::consts::E),
            (EntryKind::UniformSymmetric, _) => (1.0, 3f64.sqrt().exp()),
        }
    }

    /// Cutoff `M^δ`, or infinity without truncation.
    pub fn cutoff(&self, m: f64) -> f64 {
        match self.truncation_delta {
            Some(delta) => m.powf(delta),
            None => f64::INFINITY,
        }
    }

    fn real_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            EntryKind::Gaussian => StandardNormal.sample(rng),
            EntryKind::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryKind::UniformSymmetric => {
                let r3 = 3f64.sqrt();
                rng.random_range(-r3..r3)
            }
        }
    }

    /// Off-diagonal entry, after truncation at `cutoff`.
    pub fn sample_offdiag<R: Rng + ?Sized>(&self, rng: &mut R, cutoff: f64) -> Complex64 {
        // compare squared magnitudes before scaling so that unit-modulus laws
        // are never cut by rounding at `cutoff = 1`
        let (z, mag2) = if self.complex {
            let re = self.real_unit(rng);
            let im = self.real_unit(rng);
            let mag2 = 0.5 * (re * re + im * im);
            (Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2, mag2)
        } else {
            let re = self.real_unit(rng);
            (Complex64::new(re, 0.0), re * re)
        };
        if mag2 > cutoff * cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            z
        }
    }

    /// Diagonal entry (real law), after truncation at `cutoff`.
    pub fn sample_diag<R: Rng + ?Sized>(&self, rng: &mut R, cutoff: f64) -> f64 {
        let z = self.real_unit(rng);
        if z.abs() > cutoff {
            0.0
        } else {
            z
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::mean_and_se;

    fn check_unit_variance(dist: EntryDistribution) {
        let mut rng = stream(11, 0);
        let n = 40_000;
        let sq: Vec<f64> = (0..n)
            .map(|_| dist.sample_offdiag(&mut rng, f64::INFINITY).norm_sqr())
            .collect();
        let (mean, se) = mean_and_se(&sq);
        assert!((mean - 1.0).abs() < 4.0 * se + 1e-12, "{dist:?}: {mean} ± {se}");
        let re: Vec<f64> = (0..n)
            .map(|_| dist.sample_offdiag(&mut rng, f64::INFINITY).re)
            .collect();
        let (m1, se1) = mean_and_se(&re);
        assert!(m1.abs() < 4.0 * se1);
    }

    #[test]
    fn all_laws_have_unit_variance_and_zero_mean() {
        for kind in [EntryKind::Gaussian, EntryKind::Rademacher, EntryKind::UniformSymmetric] {
            check_unit_variance(EntryDistribution::real(kind));
            check_unit_variance(EntryDistribution::hermitian(kind));
        }
    }

    #[test]
    fn truncation_bounds_magnitude() {
        let dist = EntryDistribution::new(EntryKind::Gaussian, true, Some(0.25)).unwrap();
        let cut = dist.cutoff(16.0);
        let mut rng = stream(3, 1);
        for _ in 0..10_000 {
            assert!(dist.sample_offdiag(&mut rng, cut).norm() <= cut);
            assert!(dist.sample_diag(&mut rng, cut).abs() <= cut);
        }
    }

    #[test]
    fn rademacher_is_untouched_by_unit_cutoff() {
        let dist = EntryDistribution::real(EntryKind::Rademacher);
        let mut a = stream(5, 0);
        let mut b = stream(5, 0);
        for _ in 0..1000 {
            assert_eq!(dist.sample_offdiag(&mut a, 1.0), dist.sample_offdiag(&mut b, f64::INFINITY));
        }
    }

    #[test]
    fn rejects_negative_delta() {
        assert!(EntryDistribution::new(EntryKind::Gaussian, false, Some(-0.1)).is_err());
    }
}
