use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive;

/// Built-in one-dimensional profile families. A `d`-dimensional shape is the
/// product of `d` copies of the same factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    /// `(2s)^{-1} 1{|u| <= s}` per axis.
    Box,
    /// `s^{-1} (1 - |u|/s)_+` per axis.
    Triangular,
    /// Standard normal density at scale `s`, cut at `7.5 s`.
    Gaussian,
}

const GAUSSIAN_CUT: f64 = 7.5;

/// Product shape function `f(x) = ∏ g(x_i)` with compact declared support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFunction {
    kind: ShapeKind,
    dim: usize,
    scale: f64,
}

/// Moments of the 1-D factor: mass, first and second moment.
#[derive(Debug, Clone, Copy)]
pub struct FactorMoments {
    pub mass: f64,
    pub first: f64,
    pub second: f64,
}

impl ShapeFunction {
    pub fn new(kind: ShapeKind, dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("d", "dimension must be positive"));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("shape.params.scale", "scale must be positive and finite"));
        }
        let f = ShapeFunction { kind, dim, scale };
        f.validate()?;
        Ok(f)
    }

    pub fn boxed(dim: usize) -> Self {
        ShapeFunction::new(ShapeKind::Box, dim, 1.0).expect("unit box is admissible")
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Sup-norm radius outside which `f` is zero.
    pub fn support_radius(&self) -> f64 {
        match self.kind {
            ShapeKind::Box | ShapeKind::Triangular => self.scale,
            ShapeKind::Gaussian => GAUSSIAN_CUT * self.scale,
        }
    }

    /// Decay exponent recorded for bookkeeping; every built-in shape decays
    /// faster than any power.
    pub fn moment_order(&self) -> f64 {
        1.0
    }

    /// One-dimensional factor `g`.
    pub fn factor(&self, u: f64) -> f64 {
        let s = self.scale;
        let a = u.abs();
        match self.kind {
            ShapeKind::Box => {
                if a <= s {
                    0.5 / s
                } else {
                    0.0
                }
            }
            ShapeKind::Triangular => {
                if a < s {
                    (1.0 - a / s) / s
                } else {
                    0.0
                }
            }
            ShapeKind::Gaussian => {
                if a <= GAUSSIAN_CUT * s {
                    let z = u / s;
                    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        x.iter().map(|&u| self.factor(u)).product()
    }

    /// Moments of the factor by adaptive quadrature over its support, split
    /// at the kinks so every panel integrand is smooth.
    pub fn factor_moments(&self) -> FactorMoments {
        let r = self.support_radius();
        let tol = 1e-14;
        let moment = |k: i32| {
            let h = |u: f64| self.factor(u) * u.powi(k);
            adaptive(h, -r, 0.0, tol, tol).value + adaptive(h, 0.0, r, tol, tol).value
        };
        FactorMoments {
            mass: moment(0),
            first: moment(1),
            second: moment(2),
        }
    }

    /// `∫ f` and `∫ f x_i` of the product shape.
    pub fn mass_and_first_moment(&self) -> (f64, f64) {
        let m = self.factor_moments();
        let d = self.dim as i32;
        (m.mass.powi(d), m.first * m.mass.powi(d - 1))
    }

    /// Covariance `∫ f(x) x_i x_j dx`; diagonal for product shapes up to the
    /// (numerically zero) off-diagonal `first²` terms, which are kept.
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let m = self.factor_moments();
        let d = self.dim;
        let mut c = vec![vec![0.0; d]; d];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, cij) in row.iter_mut().enumerate() {
                *cij = if i == j {
                    m.second * m.mass.powi(d as i32 - 1)
                } else {
                    m.first * m.first * m.mass.powi(d as i32 - 2)
                };
            }
        }
        c
    }

    fn validate(&self) -> Result<()> {
        let (mass, first) = self.mass_and_first_moment();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("shape", format!("shape integrates to {mass}, not 1")));
        }
        if first.abs() > 1e-10 {
            return Err(Error::invalid("shape", format!("shape is not centred (first moment {first})")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_normalized_and_centred() {
        for kind in [ShapeKind::Box, ShapeKind::Triangular, ShapeKind::Gaussian] {
            for d in 1..=3 {
                let f = ShapeFunction::new(kind, d, 1.3).unwrap();
                let (mass, first) = f.mass_and_first_moment();
                assert!((mass - 1.0).abs() < 1e-10, "{kind:?} mass {mass}");
                assert!(first.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn box_matches_its_definition() {
        let f = ShapeFunction::boxed(2);
        assert_eq!(f.eval(&[0.3, -1.0]), 0.25);
        assert_eq!(f.eval(&[0.3, 1.01]), 0.0);
    }

    #[test]
    fn gaussian_tail_beyond_cut_is_negligible() {
        // two-sided tail mass of N(0,1) beyond 7.5
        let tail = 2.0 * 3.190891672910919e-14;
        assert!(3.0 * tail < 1e-12);
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(ShapeFunction::new(ShapeKind::Box, 1, 0.0).is_err());
        assert!(ShapeFunction::new(ShapeKind::Box, 1, f64::NAN).is_err());
    }
}
