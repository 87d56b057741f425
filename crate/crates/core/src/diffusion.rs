//! Monte Carlo estimate of `ϱ(t, x) = E|⟨δ_x, e^{-itH/2} δ_0⟩|²` and its
//! comparison with the limit density under diffusive rescaling.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chebyshev::propagate_site;
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::limit::{covariance_of_shape, LimitDensity, TestFunction, DEFAULT_NODES};
use crate::operator::HermitianOperator;
use crate::parallel::{map_indexed, Exec};
use crate::stats::{mean_and_se, tree_merge, VecAccumulator};

/// Realizations per work unit. Fixed, so the merge tree does not depend on the
/// number of workers.
const BLOCK: usize = 16;
/// Keep per-realization profiles when `realizations · N^d` is at most this.
const KEEP_SAMPLES_LIMIT: usize = 1 << 24;

#[derive(Debug, Clone, Copy)]
pub struct DiffusionOptions {
    pub residual_target: f64,
    pub exec: Exec,
    pub keep_samples: bool,
}

impl Default for DiffusionOptions {
    fn default() -> Self {
        DiffusionOptions {
            residual_target: 1e-12,
            exec: Exec::Parallel,
            keep_samples: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffusionProfile {
    pub d: usize,
    pub n: usize,
    pub w: usize,
    pub t: f64,
    pub realizations: usize,
    pub seed: u64,
    pub residual_target: f64,
    /// Reduced coordinates of every site, in index order.
    #[serde(skip)]
    pub sites: Vec<Vec<i64>>,
    pub rho: Vec<f64>,
    pub rho_se: Vec<f64>,
    /// Largest `|∑_x ϱ_r(x) - 1|` over realizations `r`.
    pub max_sum_defect: f64,
    pub max_n_max: usize,
    pub max_error_bound: f64,
    pub warnings: Vec<String>,
    /// Per-realization profiles, kept for exact functional standard errors.
    #[serde(skip)]
    pub samples: Option<Vec<Vec<f64>>>,
}

impl DiffusionProfile {
    pub fn total(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// Mean and SE of `∑_x ϱ(x) w(x)`. Exact when samples are kept, otherwise
    /// the upper bound `∑_x |w(x)| se(x)`.
    pub fn functional(&self, weight: impl Fn(&[i64]) -> f64) -> (f64, f64) {
        let w: Vec<f64> = self.sites.iter().map(|x| weight(x)).collect();
        match &self.samples {
            Some(samples) => {
                let vals: Vec<f64> = samples
                    .iter()
                    .map(|s| s.iter().zip(&w).map(|(a, b)| a * b).sum())
                    .collect();
                let (_, se) = mean_and_se(&vals);
                let mean = self.rho.iter().zip(&w).map(|(a, b)| a * b).sum();
                (mean, se)
            }
            None => {
                let mean = self.rho.iter().zip(&w).map(|(a, b)| a * b).sum();
                let se = self.rho_se.iter().zip(&w).map(|(s, b)| s * b.abs()).sum();
                (mean, se)
            }
        }
    }
}

struct Block {
    acc: VecAccumulator,
    samples: Vec<Vec<f64>>,
    max_sum_defect: f64,
    max_n_max: usize,
    max_error_bound: f64,
    warnings: Vec<String>,
}

/// Accumulated output of [`estimate_rho_with`].
pub struct RawEstimate {
    pub acc: VecAccumulator,
    pub samples: Option<Vec<Vec<f64>>>,
    pub max_sum_defect: f64,
    pub max_n_max: usize,
    pub max_error_bound: f64,
    pub warnings: Vec<String>,
}

/// Per-site mean and SE of `|ψ_t(x)|²` over realizations `0..realizations`
/// of an arbitrary sampler, started at site `origin`.
pub fn estimate_rho_with<S, H>(
    sampler: S,
    dim: usize,
    origin: usize,
    t: f64,
    realizations: usize,
    opts: DiffusionOptions,
) -> Result<RawEstimate>
where
    S: Fn(u64) -> H + Sync + Send,
    H: HermitianOperator,
{
    if realizations == 0 {
        return Err(Error::invalid("realizations", "need at least one realization"));
    }
    let keep = opts.keep_samples && realizations.saturating_mul(dim) <= KEEP_SAMPLES_LIMIT;
    let blocks = realizations.div_ceil(BLOCK);
    let results: Vec<Result<Block>> = map_indexed(opts.exec, blocks, |b| {
        let mut block = Block {
            acc: VecAccumulator::new(dim),
            samples: Vec::new(),
            max_sum_defect: 0.0,
            max_n_max: 0,
            max_error_bound: 0.0,
            warnings: Vec::new(),
        };
        for r in b * BLOCK..((b + 1) * BLOCK).min(realizations) {
            let h = sampler(r as u64);
            let p = propagate_site(&h, origin, t, opts.residual_target)?;
            let rho: Vec<f64> = p.state.iter().map(|z| z.norm_sqr()).collect();
            let sum: f64 = rho.iter().sum();
            block.max_sum_defect = block.max_sum_defect.max((sum - 1.0).abs());
            block.max_n_max = block.max_n_max.max(p.n_max);
            block.max_error_bound = block.max_error_bound.max(p.error_bound);
            if block.warnings.len() < 4 {
                block.warnings.extend(p.warnings.into_iter().map(|w| format!("realization {r}: {w}")));
            }
            block.acc.push(&rho);
            if keep {
                block.samples.push(rho);
            }
        }
        Ok(block)
    });
    let mut accs = Vec::with_capacity(blocks);
    let mut samples = keep.then(Vec::new);
    let (mut defect, mut nmax, mut bound) = (0.0f64, 0usize, 0.0f64);
    let mut warnings = Vec::new();
    for r in results {
        let b = r?;
        defect = defect.max(b.max_sum_defect);
        nmax = nmax.max(b.max_n_max);
        bound = bound.max(b.max_error_bound);
        if warnings.len() < 8 {
            warnings.extend(b.warnings);
        }
        if let Some(s) = samples.as_mut() {
            s.extend(b.samples);
        }
        accs.push(b.acc);
    }
    Ok(RawEstimate {
        acc: tree_merge(accs, dim),
        samples,
        max_sum_defect: defect,
        max_n_max: nmax,
        max_error_bound: bound,
        warnings,
    })
}

/// `ϱ(t, ·)` for the ensemble, from realizations `0..realizations`.
pub fn estimate_rho(ensemble: &Ensemble, t: f64, realizations: usize, opts: DiffusionOptions) -> Result<DiffusionProfile> {
    let lattice = ensemble.profile.lattice().clone();
    let raw = estimate_rho_with(
        |r| ensemble.sample(r),
        lattice.size(),
        lattice.origin(),
        t,
        realizations,
        opts,
    )?;
    let mut warnings = raw.warnings;
    warnings.extend(ensemble.profile.warnings().iter().cloned());
    Ok(DiffusionProfile {
        d: lattice.dim(),
        n: lattice.side(),
        w: ensemble.profile.width(),
        t,
        realizations,
        seed: ensemble.seed,
        residual_target: opts.residual_target,
        sites: lattice.points().collect(),
        rho: raw.acc.mean().to_vec(),
        rho_se: raw.acc.std_error(),
        max_sum_defect: raw.max_sum_defect,
        max_n_max: raw.max_n_max,
        max_error_bound: raw.max_error_bound,
        warnings,
        samples: raw.samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakTest {
    pub phi: TestFunction,
    pub lattice_value: f64,
    pub lattice_se: f64,
    pub limit_value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledSummary {
    pub kappa: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    /// `W^{1 + dκ/2}`.
    pub length_scale: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub weak_tests: Vec<WeakTest>,
    pub warnings: Vec<String>,
}

/// Macroscopic time `T = t / W^{dκ}` implied by a run.
pub fn macroscopic_time(profile: &DiffusionProfile, kappa: f64) -> f64 {
    profile.t / (profile.w as f64).powf(profile.d as f64 * kappa)
}

fn check_time(profile: &DiffusionProfile, kappa: f64, big_t: f64) -> Result<()> {
    let expect = (profile.w as f64).powf(profile.d as f64 * kappa) * big_t;
    if (expect - profile.t).abs() > 1e-12 * expect.abs().max(1.0) {
        return Err(Error::invalid(
            "t",
            format!("stored t = {} differs from W^(dκ)·T = {expect}", profile.t),
        ));
    }
    Ok(())
}

fn regime_warnings(profile: &DiffusionProfile, kappa: f64) -> Vec<String> {
    let mut w = Vec::new();
    let lower = (profile.w as f64).powf(1.0 + profile.d as f64 / 6.0);
    if (profile.n as f64) < lower {
        w.push(format!("N = {} is below W^(1+d/6) = {lower:.1}", profile.n));
    }
    if kappa >= 1.0 / 3.0 {
        w.push(format!("κ = {kappa} is not below 1/3"));
    }
    for msg in &w {
        log::warn!("{msg}");
    }
    w
}

/// Compare `∑_x ϱ(W^{dκ}T, x) φ(x / W^{1+dκ/2})` with `∫ L(T, X) φ(X) dX`.
pub fn weak_test(
    profile: &DiffusionProfile,
    sigma_source: &crate::ensemble::ShapeFunction,
    kappa: f64,
    big_t: f64,
    phis: &[TestFunction],
) -> Result<RescaledSummary> {
    check_time(profile, kappa, big_t)?;
    let warnings = regime_warnings(profile, kappa);
    let d = profile.d;
    let scale = (profile.w as f64).powf(1.0 + d as f64 * kappa / 2.0);
    let limit = LimitDensity::new(big_t, covariance_of_shape(sigma_source)?, DEFAULT_NODES)?;

    let rescaled = |x: &[i64]| -> Vec<f64> { x.iter().map(|&c| c as f64 / scale).collect() };
    let mut mean = vec![0.0; d];
    let mut second = vec![vec![0.0; d]; d];
    for (x, r) in profile.sites.iter().zip(&profile.rho) {
        let xs = rescaled(x);
        for i in 0..d {
            mean[i] += r * xs[i];
            for j in 0..d {
                second[i][j] += r * xs[i] * xs[j];
            }
        }
    }
    let covariance = (0..d)
        .map(|i| (0..d).map(|j| second[i][j] - mean[i] * mean[j]).collect())
        .collect();

    let mut weak_tests = Vec::new();
    for phi in phis {
        let (lattice_value, lattice_se) = profile.functional(|x| phi.eval(&rescaled(x)));
        let limit_value = limit.expectation(phi)?;
        weak_tests.push(WeakTest {
            phi: phi.clone(),
            lattice_value,
            lattice_se,
            limit_value,
            gap: lattice_value - limit_value,
        });
    }
    Ok(RescaledSummary {
        kappa,
        big_t,
        length_scale: scale,
        mean,
        covariance,
        weak_tests,
        warnings,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondMomentReport {
    pub kappa: f64,
    #[serde(rename = "T")]
    pub big_t: f64,
    /// `∑_x ϱ |x|² / W^{2+dκ}`.
    pub lattice_moment: f64,
    pub lattice_se: f64,
    /// `(8/(3π)) T tr Σ`.
    pub target: f64,
    pub ratio: f64,
    pub ratio_se: f64,
}

pub fn second_moment_check(
    profile: &DiffusionProfile,
    sigma_source: &crate::ensemble::ShapeFunction,
    kappa: f64,
    big_t: f64,
) -> Result<SecondMomentReport> {
    check_time(profile, kappa, big_t)?;
    let norm = (profile.w as f64).powf(2.0 + profile.d as f64 * kappa);
    let (m, se) = profile.functional(|x| x.iter().map(|&c| (c * c) as f64).sum::<f64>() / norm);
    let sigma = covariance_of_shape(sigma_source)?;
    let target = 8.0 / (3.0 * PI) * big_t * sigma.trace();
    Ok(SecondMomentReport {
        kappa,
        big_t,
        lattice_moment: m,
        lattice_se: se,
        target,
        ratio: m / target,
        ratio_se: se / target,
    })
}

/// Lattice covariance `∑_x ϱ x x^T` (unscaled).
pub fn lattice_covariance(profile: &DiffusionProfile) -> DMatrix<f64> {
    let d = profile.d;
    let mut c = DMatrix::zeros(d, d);
    for (x, r) in profile.sites.iter().zip(&profile.rho) {
        for i in 0..d {
            for j in 0..d {
                c[(i, j)] += r * (x[i] * x[j]) as f64;
            }
        }
    }
    c
}
