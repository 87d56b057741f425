//! Limit objects of the diffusion experiment: the shape covariance `Σ`, the
//! heat kernel `G(T, X)` and the superposition `L(T, X)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::ShapeFunction;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_NODES: usize = 200;

/// Symmetric positive-definite `d × d` matrix with cached inverse and
/// determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    det: f64,
}

impl Covariance {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid("sigma", "covariance must be a non-empty square matrix"));
        }
        let scale = matrix.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if (&matrix - matrix.transpose()).iter().any(|v| v.abs() > 1e-12 * scale.max(1.0)) {
            return Err(Error::invalid("sigma", "covariance is not symmetric"));
        }
        let eig = matrix.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(max > 0.0) || min < 1e-10 * max {
            return Err(Error::invalid("sigma", format!("covariance is singular (eigenvalues in [{min:e}, {max:e}])")));
        }
        let det = eig.eigenvalues.iter().product();
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("sigma", "covariance is not invertible"))?;
        Ok(Covariance { matrix, inverse, det })
    }

    pub fn scalar(d: usize, v: f64) -> Result<Self> {
        Covariance::new(DMatrix::from_diagonal_element(d, d, v))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// `X · Σ^{-1} X`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += x[i] * self.inverse[(i, j)] * x[j];
            }
        }
        q
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.matrix[(i, j)] == 0.0))
    }
}

/// `Σ_ij = ∫ f(x) x_i x_j dx`, by adaptive quadrature on the factor.
pub fn covariance_of_shape(f: &ShapeFunction) -> Result<Covariance> {
    let c = f.covariance();
    let d = f.dim();
    Covariance::new(DMatrix::from_fn(d, d, |i, j| c[i][j]))
}

/// `G(T, X) = (2πT)^{-d/2} (det Σ)^{-1/2} exp(-X·Σ⁻¹X / 2T)`.
pub fn heat_kernel(t: f64, x: &[f64], sigma: &Covariance) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid("T", "heat kernel needs T > 0"));
    }
    Ok(heat_kernel_unchecked(t, x, sigma))
}

fn heat_kernel_unchecked(t: f64, x: &[f64], sigma: &Covariance) -> f64 {
    let d = sigma.dim() as f64;
    let q = sigma.quadratic_form(x);
    (-q / (2.0 * t)).exp() / ((2.0 * PI * t).powf(d / 2.0) * sigma.det().sqrt())
}

/// `L(T, ·)` with its λ-quadrature precomputed.
///
/// With `λ = sin θ` the weight `(4/π) λ²/√(1-λ²) dλ` becomes `(4/π) sin²θ dθ`
/// on `[0, π/2]`, which Gauss–Legendre integrates without endpoint trouble.
/// In `d = 3` at `X = 0` the θ-integrand still has an integrable `√sin θ`
/// cusp at the origin, so convergence there is algebraic.
#[derive(Debug, Clone)]
pub struct LimitDensity {
    t: f64,
    sigma: Covariance,
    /// `(λ_k, w_k)` with `∑ w_k g(λ_k) ≈ ∫ (4/π) λ²/√(1-λ²) g(λ) dλ`.
    nodes: Vec<(f64, f64)>,
}

impl LimitDensity {
    pub fn new(t: f64, sigma: Covariance, quadrature_nodes: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("T", "limit density needs T > 0"));
        }
        if quadrature_nodes == 0 {
            return Err(Error::invalid("quadrature_nodes", "need at least one node"));
        }
        let gl = GaussLegendre::new(quadrature_nodes);
        let half = FRAC_PI_2 / 2.0;
        let nodes = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(&u, &w)| {
                let theta = half * (u + 1.0);
                let s = theta.sin();
                (s, half * w * 4.0 / PI * s * s)
            })
            .collect();
        Ok(LimitDensity { t, sigma, nodes })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn sigma(&self) -> &Covariance {
        &self.sigma
    }

    pub fn lambda_nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// Discrete `∫ (4/π) λ²/√(1-λ²) dλ`, exactly 1 analytically.
    pub fn weight_mass(&self) -> f64 {
        self.nodes.iter().map(|&(_, w)| w).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.nodes
            .iter()
            .map(|&(lam, w)| w * heat_kernel_unchecked(lam * self.t, x, &self.sigma))
            .sum()
    }

    /// `∫ X X^T L(T, X) dX = (8/(3π)) T Σ`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        self.sigma.matrix() * (8.0 / (3.0 * PI) * self.t)
    }

    /// `∫ L(T, X) φ(X) dX`, through the Gaussian expectation of `φ` at each
    /// λ-node.
    pub fn expectation(&self, phi: &TestFunction) -> Result<f64> {
        let mut acc = 0.0;
        for &(lam, w) in &self.nodes {
            let c = self.sigma.matrix() * (lam * self.t);
            acc += w * phi.gaussian_expectation(&c)?;
        }
        Ok(acc)
    }
}

/// `∫ L(T, X) dX`-weighted `λ` moment `∫ (4/π) λ^{2+k}/√(1-λ²) dλ`.
pub fn lambda_moment(k: u32, nodes: usize) -> f64 {
    let gl = GaussLegendre::new(nodes);
    gl.integrate(0.0, FRAC_PI_2, |th| 4.0 / PI * th.sin().powi(2 + k as i32))
}

/// Bounded test functions for weak convergence checks, plus the odd linear
/// probe used for symmetry checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant,
    /// `exp(-|X|²/(2 s²))`.
    Gaussian {
        #[serde(default = "one")]
        width: f64,
    },
    /// `∏ cos(ω X_i)`.
    Cosine { omega: f64 },
    /// `1{|X|_∞ ≤ a}`.
    BoxIndicator { half_width: f64 },
    /// `X_axis`.
    Linear { axis: usize },
}

fn one() -> f64 {
    1.0
}

impl TestFunction {
    pub fn gaussian() -> Self {
        TestFunction::Gaussian { width: 1.0 }
    }

    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant => "constant".into(),
            TestFunction::Gaussian { width } => format!("gaussian(width={width})"),
            TestFunction::Cosine { omega } => format!("cosine(omega={omega})"),
            TestFunction::BoxIndicator { half_width } => format!("box_indicator(a={half_width})"),
            TestFunction::Linear { axis } => format!("linear(axis={axis})"),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Gaussian { width } => {
                (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * width * width)).exp()
            }
            TestFunction::Cosine { omega } => x.iter().map(|v| (omega * v).cos()).product(),
            TestFunction::BoxIndicator { half_width } => {
                if x.iter().all(|v| v.abs() <= half_width) {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::Linear { axis } => x[axis],
        }
    }

    /// `E φ(X)` for `X ~ N(0, C)`.
    pub fn gaussian_expectation(&self, c: &DMatrix<f64>) -> Result<f64> {
        let d = c.nrows();
        Ok(match *self {
            TestFunction::Constant => 1.0,
            TestFunction::Gaussian { width } => {
                let m = DMatrix::identity(d, d) + c / (width * width);
                1.0 / m.determinant().sqrt()
            }
            TestFunction::Cosine { omega } => {
                let mut acc = 0.0;
                for mask in 0..(1usize << d) {
                    let s: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
                    let mut q = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            q += s[i] * c[(i, j)] * s[j];
                        }
                    }
                    acc += (-0.5 * omega * omega * q).exp();
                }
                acc / (1usize << d) as f64
            }
            TestFunction::BoxIndicator { half_width } => {
                let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || c[(i, j)] == 0.0));
                if !diagonal {
                    return Err(Error::invalid("phi", "box indicator needs a diagonal covariance"));
                }
                (0..d)
                    .map(|i| libm::erf(half_width / (2.0 * c[(i, i)]).sqrt()))
                    .product()
            }
            TestFunction::Linear { .. } => 0.0,
        })
    }
}
