//! Largest eigenvalue, Chebyshev traces and edge tail experiments.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::cheb_u;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::operator::HermitianOperator;
use crate::parallel::{map_indexed, Exec};
use crate::rng::{derive_seed, stream};
use crate::stats::{mean_and_se, median};

pub const DENSE_LIMIT: usize = 4096;
pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const DEFAULT_PROBES: usize = 32;
pub const DEFAULT_KAPPA: f64 = 0.25;
const LANCZOS_BASIS: usize = 160;
const LANCZOS_RESTARTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMax {
    pub value: f64,
    /// `‖Hv − λv‖` for the returned unit vector.
    pub residual: f64,
    pub method: EigenMethod,
    pub iterations: usize,
    #[serde(skip)]
    pub spectrum: Option<Vec<f64>>,
}

fn residual_of<H: HermitianOperator + ?Sized>(h: &H, v: &[Complex64], lambda: f64) -> f64 {
    let mut hv = vec![Complex64::default(); v.len()];
    h.apply(v, &mut hv);
    hv.iter().zip(v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse iteration at a shift just above the top eigenvalue.
fn top_vector<T: nalgebra::ComplexField<RealField = f64> + Copy>(m: DMatrix<T>, top: f64, scale: f64) -> Vec<T> {
    let n = m.nrows();
    let shift = T::from_real(top + 1e-10 * scale);
    let lu = (m - DMatrix::<T>::identity(n, n).scale(1.0) * shift).lu();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| T::from_real(1.0 + (i as f64 * 0.618_033_988_7).fract()));
    for _ in 0..3 {
        if let Some(x) = lu.solve(&v) {
            v = x;
        }
        let norm = v.norm();
        if norm > 0.0 && norm.is_finite() {
            v.unscale_mut(norm);
        }
    }
    v.iter().copied().collect()
}

/// Full spectrum from the dense solver without eigenvectors.
fn dense_max<H: HermitianOperator + ?Sized>(h: &H) -> (f64, Vec<Complex64>, Vec<f64>) {
    let m = h.to_dense();
    let top_of = |s: &[f64]| {
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (top, s.iter().fold(1.0f64, |a, l| a.max(l.abs())))
    };
    if h.is_real() {
        let re = m.map(|z| z.re);
        let spectrum: Vec<f64> = re.clone().symmetric_eigenvalues().iter().copied().collect();
        let (top, scale) = top_of(&spectrum);
        let v = top_vector(re, top, scale).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        (top, v, spectrum)
    } else {
        let spectrum: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        let (top, scale) = top_of(&spectrum);
        (top, top_vector(m, top, scale), spectrum)
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted Lanczos with full reorthogonalization; the start vector of
/// each cycle is the previous Ritz vector.
fn lanczos_max<H: HermitianOperator + ?Sized>(h: &H, rel_tol: f64, seed: u64) -> Result<LambdaMax> {
    let n = h.dim();
    let k_max = LANCZOS_BASIS.min(n);
    let mut rng = stream(derive_seed(seed, 0x1a2c), 0);
    let mut start: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
    normalize(&mut start);
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    let mut iterations = 0;
    for _ in 0..LANCZOS_RESTARTS {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut w = vec![Complex64::default(); n];
        for j in 0..k_max {
            h.apply(&basis[j], &mut w);
            iterations += 1;
            alpha.push(dot(&basis[j], &w).re);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let b = normalize(&mut w);
            if j + 1 == k_max || b <= 1e-14 * alpha.iter().fold(1.0f64, |m, a| m.max(a.abs())) {
                break;
            }
            beta.push(b);
            basis.push(w.clone());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let top = eig.eigenvalues.imax();
        let theta = eig.eigenvalues[top];
        let s = eig.eigenvectors.column(top);
        let mut y = vec![Complex64::default(); n];
        for (q, &c) in basis.iter().zip(s.iter()) {
            y.iter_mut().zip(q).for_each(|(a, b)| *a += b * c);
        }
        normalize(&mut y);
        let r = residual_of(h, &y, theta);
        best = (theta, r);
        if r <= rel_tol * theta.abs().max(f64::MIN_POSITIVE) {
            return Ok(LambdaMax {
                value: theta,
                residual: r,
                method: EigenMethod::Lanczos,
                iterations,
                spectrum: None,
            });
        }
        start = y;
    }
    Err(Error::NonConvergence {
        what: "lanczos λ_max".into(),
        iterations,
        estimate: best.0,
        residual: best.1,
    })
}

/// Largest eigenvalue certified by `‖Hv − λv‖ ≤ rel_tol·|λ|`.
pub fn lambda_max<H: HermitianOperator + ?Sized>(h: &H, rel_tol: f64, method: EigenMethod) -> Result<LambdaMax> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::invalid("rel_tol", "must lie in (0, 1)"));
    }
    let n = h.dim();
    let dense = match method {
        EigenMethod::Auto => n <= DENSE_LIMIT,
        EigenMethod::Dense if n > DENSE_LIMIT => {
            return Err(Error::SizeCap(format!("dense eigensolver capped at {DENSE_LIMIT}, got {n}")))
        }
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
    };
    if !dense {
        return lanczos_max(h, rel_tol, n as u64);
    }
    let (value, v, spectrum) = dense_max(h);
    let residual = residual_of(h, &v, value);
    // an exactly zero matrix has λ = 0 and residual 0
    if residual > rel_tol * value.abs() && residual > 0.0 {
        return Err(Error::NonConvergence {
            what: "dense λ_max".into(),
            iterations: 1,
            estimate: value,
            residual,
        });
    }
    Ok(LambdaMax {
        value,
        residual,
        method: EigenMethod::Dense,
        iterations: 1,
        spectrum: Some(spectrum),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    /// Recursion on every basis vector.
    Exact,
    /// Rademacher probe vectors.
    Probes(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub n: usize,
    pub value: f64,
    pub std_error: f64,
    pub method: TraceMethod,
}

/// `⟨v, Ũ_n(H) v⟩` via `u_{k+1} = H u_k − u_{k−1}`.
fn cheb_quadratic<H: HermitianOperator + ?Sized>(h: &H, v: &[Complex64], n: usize) -> f64 {
    let dim = v.len();
    let mut prev = v.to_vec();
    if n == 0 {
        return dot(v, &prev).re;
    }
    let mut cur = vec![Complex64::default(); dim];
    h.apply(v, &mut cur);
    let mut next = vec![Complex64::default(); dim];
    for _ in 1..n {
        h.apply(&cur, &mut next);
        next.iter_mut().zip(&prev).for_each(|(a, b)| *a -= b);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    dot(v, &cur).re
}

/// `tr Ũ_n(H)`, exactly on basis vectors or by probing with a reported SE.
pub fn cheb_trace<H: HermitianOperator + ?Sized>(h: &H, n: usize, method: TraceMethod, seed: u64) -> Result<TraceEstimate> {
    let dim = h.dim();
    match method {
        TraceMethod::Exact => {
            if n == 0 {
                return Ok(TraceEstimate { n, value: dim as f64, std_error: 0.0, method });
            }
            let mut e = vec![Complex64::default(); dim];
            let mut total = 0.0;
            for x in 0..dim {
                e[x] = Complex64::new(1.0, 0.0);
                total += cheb_quadratic(h, &e, n);
                e[x] = Complex64::default();
            }
            Ok(TraceEstimate { n, value: total, std_error: 0.0, method })
        }
        TraceMethod::Probes(p) => {
            if p < 2 {
                return Err(Error::invalid("probes", "need at least two probe vectors"));
            }
            let mut rng = stream(derive_seed(seed, 0x7ace), n as u64);
            let samples: Vec<f64> = (0..p)
                .map(|_| {
                    let z: Vec<Complex64> = (0..dim)
                        .map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
                        .collect();
                    cheb_quadratic(h, &z, n)
                })
                .collect();
            let (value, std_error) = mean_and_se(&samples);
            Ok(TraceEstimate { n, value, std_error, method })
        }
    }
}

/// `∑_i Ũ_n(λ_i)` from a known spectrum.
pub fn cheb_trace_from_spectrum(spectrum: &[f64], n: usize) -> f64 {
    spectrum.iter().map(|&l| cheb_u(n, l)).sum()
}

/// Trace method used when the caller does not choose.
pub fn default_trace_method(dim: usize) -> TraceMethod {
    if dim <= DENSE_LIMIT {
        TraceMethod::Exact
    } else {
        TraceMethod::Probes(DEFAULT_PROBES)
    }
}

/// `(E tr Ũ_n(H) + D(n+1)) / e^{n√ξ}` for `D = N^d`.
pub fn chebyshev_markov_bound(mean_trace: f64, dim: usize, n: usize, xi: f64) -> f64 {
    (mean_trace + (dim * (n + 1)) as f64) / (n as f64 * xi.sqrt()).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub n: usize,
    pub xi: f64,
    pub samples: usize,
    pub mean_trace: f64,
    pub trace_se: f64,
    /// Bound with the mean trace.
    pub bound: f64,
    /// Bound with the mean trace inflated by three standard errors.
    pub bound_inflated: f64,
    pub frequency: f64,
    pub frequency_se: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeOptions {
    pub rel_tol: f64,
    pub method: EigenMethod,
    pub exec: Exec,
}

impl Default for EdgeOptions {
    fn default() -> Self {
        EdgeOptions { rel_tol: DEFAULT_REL_TOL, method: EigenMethod::Auto, exec: Exec::Parallel }
    }
}

struct Trial {
    lambda: f64,
    schur: f64,
    traces: Vec<f64>,
}

fn run_trial(ensemble: &Ensemble, index: u64, ns: &[usize], opts: &EdgeOptions) -> Result<Trial> {
    let h = ensemble.sample(index);
    let lm = lambda_max(&h, opts.rel_tol, opts.method)?;
    let traces = match &lm.spectrum {
        Some(s) => ns.iter().map(|&n| cheb_trace_from_spectrum(s, n)).collect(),
        None => ns
            .iter()
            .map(|&n| cheb_trace(&h, n, default_trace_method(h.dim()), derive_seed(ensemble.seed, index)).map(|t| t.value))
            .collect::<Result<_>>()?,
    };
    Ok(Trial { lambda: lm.value, schur: h.schur_bound(), traces })
}

fn run_trials(ensemble: &Ensemble, trials: usize, ns: &[usize], opts: &EdgeOptions) -> Result<Vec<Trial>> {
    map_indexed(opts.exec, trials, |i| run_trial(ensemble, i as u64, ns, opts))
        .into_iter()
        .collect()
}

fn kappa_warning(ensemble: &Ensemble, n: usize) -> Option<String> {
    let m = 1.0 / ensemble.profile.max_variance();
    let cap = m.powf(DEFAULT_KAPPA);
    (n as f64 > cap).then(|| format!("n = {n} exceeds M^κ = {cap:.2} (κ = {DEFAULT_KAPPA})"))
}

fn tail_from_trials(ensemble: &Ensemble, trials: &[Trial], slot: usize, n: usize, xi: f64) -> TailBound {
    let dim = ensemble.profile.lattice().size();
    let traces: Vec<f64> = trials.iter().map(|t| t.traces[slot]).collect();
    let (mean_trace, trace_se) = mean_and_se(&traces);
    let hits: Vec<f64> = trials.iter().map(|t| f64::from(u8::from(t.lambda >= 2.0 + 2.0 * xi))).collect();
    let (frequency, frequency_se) = mean_and_se(&hits);
    TailBound {
        n,
        xi,
        samples: trials.len(),
        mean_trace,
        trace_se,
        bound: chebyshev_markov_bound(mean_trace, dim, n, xi),
        bound_inflated: chebyshev_markov_bound(mean_trace + 3.0 * trace_se, dim, n, xi),
        frequency,
        frequency_se,
        warnings: kappa_warning(ensemble, n).into_iter().collect(),
    }
}

fn check_tail_args(n: usize, xi: f64, samples: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::invalid("n", "the tail bound needs even n"));
    }
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::invalid("xi", "must lie in (0, 1]"));
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least two samples"));
    }
    Ok(())
}

/// Chebyshev–Markov bound on `P(λ_max ≥ 2 + 2ξ)` with the expected trace
/// estimated from `samples` realizations, next to the empirical frequency.
pub fn edge_tail_bound(ensemble: &Ensemble, n: usize, xi: f64, samples: usize, opts: &EdgeOptions) -> Result<TailBound> {
    check_tail_args(n, xi, samples)?;
    let trials = run_trials(ensemble, samples, &[n], opts)?;
    Ok(tail_from_trials(ensemble, &trials, 0, n, xi))
}

/// The same bound on a grid of `(n, ξ)` sharing one set of realizations.
pub fn edge_tail_grid(
    ensemble: &Ensemble,
    ns: &[usize],
    xis: &[f64],
    samples: usize,
    opts: &EdgeOptions,
) -> Result<Vec<TailBound>> {
    for &n in ns {
        for &xi in xis {
            check_tail_args(n, xi, samples)?;
        }
    }
    let trials = run_trials(ensemble, samples, ns, opts)?;
    let mut out = Vec::new();
    for (slot, &n) in ns.iter().enumerate() {
        for &xi in xis {
            out.push(tail_from_trials(ensemble, &trials, slot, n, xi));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeReport {
    #[serde(rename = "M")]
    pub m: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub threshold: f64,
    pub lambda_max: Vec<f64>,
    pub schur_bounds: Vec<f64>,
    pub exceedances: usize,
    pub frequency: f64,
    pub median: f64,
    /// Even degree used for the analytic bound, `≈ M^κ`.
    pub n: usize,
    pub mean_trace: f64,
    pub chebyshev_markov_bound: f64,
    /// Ensemble means of `tr Ũ_n` for odd `n`, which vanish for symmetric laws.
    pub odd_traces: Vec<OddTrace>,
    /// `min log Ũ_n(2(1+ξ)) − n√ξ` over [`GROWTH_XI`] and `n ≤ GROWTH_N_MAX`.
    pub growth_margin: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddTrace {
    pub n: usize,
    pub mean: f64,
    pub se: f64,
}

pub const ODD_DEGREES: [usize; 4] = [1, 3, 5, 7];
pub const GROWTH_XI: [f64; 3] = [0.01, 0.1, 0.5];
pub const GROWTH_N_MAX: usize = 100;

/// Smallest value of `log Ũ_n(2(1+ξ)) − n√ξ` on the fixed grid; nonnegative when the growth bound holds.
pub fn chebyshev_growth_margin() -> f64 {
    let mut worst = f64::INFINITY;
    for xi in GROWTH_XI {
        for (n, u) in crate::chebyshev::cheb_u_all(GROWTH_N_MAX, 2.0 * (1.0 + xi)).into_iter().enumerate() {
            worst = worst.min(u.ln() - n as f64 * xi.sqrt());
        }
    }
    worst
}

/// Sample `trials` matrices and count `λ_max ≥ 2 + M^{−2/3+ε}`.
pub fn edge_experiment(ensemble: &Ensemble, epsilon: f64, trials: usize, opts: &EdgeOptions) -> Result<EdgeReport> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "need at least one trial"));
    }
    let mut warnings = Vec::new();
    let defect = (0..ensemble.profile.lattice().size())
        .map(|x| (ensemble.profile.row_sum(x) - 1.0).abs())
        .fold(0.0, f64::max);
    if defect > 1e-9 {
        warnings.push(format!("row variance sums deviate from one by {defect:.3e}"));
    }
    let m = 1.0 / ensemble.profile.max_variance();
    let threshold = 2.0 + m.powf(-2.0 / 3.0 + epsilon);
    let n = (((m.powf(DEFAULT_KAPPA) / 2.0).floor() as usize) * 2).max(2);
    let mut degrees = vec![n];
    degrees.extend(ODD_DEGREES);
    let out = run_trials(ensemble, trials, &degrees, opts)?;
    let odd_traces = ODD_DEGREES
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let v: Vec<f64> = out.iter().map(|t| t.traces[k + 1]).collect();
            let (mean, se) = mean_and_se(&v);
            OddTrace { n, mean, se }
        })
        .collect();
    let lambda_max: Vec<f64> = out.iter().map(|t| t.lambda).collect();
    let schur_bounds = out.iter().map(|t| t.schur).collect();
    let exceedances = lambda_max.iter().filter(|&&l| l >= threshold).count();
    let traces: Vec<f64> = out.iter().map(|t| t.traces[0]).collect();
    let mean_trace = traces.iter().sum::<f64>() / traces.len() as f64;
    let xi = (threshold - 2.0) / 2.0;
    let dim = ensemble.profile.lattice().size();
    warnings.extend(kappa_warning(ensemble, n));
    Ok(EdgeReport {
        m,
        epsilon,
        trials,
        threshold,
        median: median(&lambda_max),
        lambda_max,
        schur_bounds,
        exceedances,
        frequency: exceedances as f64 / trials as f64,
        n,
        mean_trace,
        chebyshev_markov_bound: chebyshev_markov_bound(mean_trace, dim, n, xi),
        odd_traces,
        growth_margin: chebyshev_growth_margin(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseHermitian;

    #[test]
    fn small_examples() {
        let d = DenseHermitian::from_real(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 3.0]]).unwrap();
        assert!((lambda_max(&d, 1e-8, EigenMethod::Dense).unwrap().value - 3.0).abs() < 1e-12);
        let s = DenseHermitian::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        for m in [EigenMethod::Dense, EigenMethod::Lanczos] {
            assert!((lambda_max(&s, 1e-8, m).unwrap().value - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn trace_of_identity_and_linear_term() {
        let d = DenseHermitian::from_real(&[&[0.5, 1.0], &[1.0, -0.25]]).unwrap();
        assert_eq!(cheb_trace(&d, 0, TraceMethod::Exact, 0).unwrap().value, 2.0);
        assert!((cheb_trace(&d, 1, TraceMethod::Exact, 0).unwrap().value - 0.25).abs() < 1e-15);
        // tr Ũ_2(H) = tr H² − 2
        let t2 = cheb_trace(&d, 2, TraceMethod::Exact, 0).unwrap().value;
        assert!((t2 - (0.25 + 2.0 + 0.0625 - 2.0)).abs() < 1e-14);
        let spec = dense_max(&d).2;
        assert!((cheb_trace_from_spectrum(&spec, 2) - t2).abs() < 1e-12);
    }

    #[test]
    fn bound_formula() {
        let b = chebyshev_markov_bound(0.0, 10, 4, 0.25);
        assert!((b - 50.0 / 2f64.exp()).abs() < 1e-12);
    }
}
