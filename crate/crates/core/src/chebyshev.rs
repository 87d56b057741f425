//! Chebyshev polynomials of the second kind, Bessel coefficients and the
//! propagator `e^{-itH/2}` as a three-term vector recursion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::HermitianOperator;

const CUTOFF_CAP: usize = 1_000_000;
const NORM_DRIFT: f64 = 1e-6;

/// `Ũ_n(ξ) = U_n(ξ/2)` by `Ũ_n = ξ Ũ_{n-1} - Ũ_{n-2}`.
pub fn cheb_u(n: usize, xi: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, xi);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = xi * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `Ũ_0(ξ), …, Ũ_n(ξ)`.
pub fn cheb_u_all(n: usize, xi: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(xi);
    }
    for k in 2..=n {
        out.push(xi * out[k - 1] - out[k - 2]);
    }
    out
}

/// `ln Ũ_n(ρ)` for `ρ ≥ 2`, without overflow.
fn ln_cheb_u_above_two(n: usize, rho: f64) -> f64 {
    let m = (n + 1) as f64;
    if rho <= 2.0 {
        return m.ln();
    }
    let zeta = (rho / 2.0).acosh();
    // ln sinh((n+1)ζ) - ln sinh ζ, with ln sinh a = a + ln(1 - e^{-2a}) - ln 2
    let ln_sinh = |a: f64| a + (-(-2.0 * a).exp()).ln_1p();
    ln_sinh(m * zeta) - ln_sinh(zeta)
}

/// Start index of the backward recurrence for `J_0..J_top` at argument `t`.
pub fn miller_start(t: f64, top: usize) -> usize {
    top.max(t.ceil() as usize) + (10.0 + 2.0 * t.cbrt()).ceil() as usize
}

/// `J_0(t), …, J_top(t)` by Miller's backward recurrence, normalized with
/// `J_0 + 2∑_k J_{2k} = 1`.
pub fn bessel_j_sequence(t: f64, top: usize) -> Vec<f64> {
    assert!(t >= 0.0 && t.is_finite());
    let mut out = vec![0.0; top + 1];
    if t == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = miller_start(t, top);
    let big = 1e250;
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut norm = 0.0f64;
    for k in (0..=start).rev() {
        // `cur` holds the unnormalized J_k
        if k <= top {
            out[k] = cur;
        }
        if k == 0 {
            norm += cur;
        } else if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        if k == 0 {
            break;
        }
        let prev = (2.0 * k as f64 / t) * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > big {
            let s = 1.0 / big;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut().skip(k.saturating_sub(1)) {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// `α_n(t) = 2(-i)^n (n+1)/t · J_{n+1}(t)` from a Bessel table.
fn alphas_from_bessel(t: f64, j: &[f64], len: usize) -> Vec<Complex64> {
    if t == 0.0 {
        let mut a = vec![Complex64::new(0.0, 0.0); len];
        if len > 0 {
            a[0] = Complex64::new(1.0, 0.0);
        }
        return a;
    }
    (0..len)
        .map(|n| {
            let mag = 2.0 * (n + 1) as f64 / t * j[n + 1];
            match n % 4 {
                0 => Complex64::new(mag, 0.0),
                1 => Complex64::new(0.0, -mag),
                2 => Complex64::new(-mag, 0.0),
                _ => Complex64::new(0.0, mag),
            }
        })
        .collect()
}

/// `α_0(t), …, α_n(t)` with no cutoff selection.
pub fn alpha_upto(t: f64, n: usize) -> Vec<Complex64> {
    let j = bessel_j_sequence(t, n + 1);
    alphas_from_bessel(t, &j, n + 1)
}

/// Coefficients `α_0..α_{n_max}` with the certified tail `∑_{n>n_max} |α_n|²`.
#[derive(Debug, Clone)]
pub struct ChebCoefficients {
    pub t: f64,
    pub n_max: usize,
    pub alpha: Vec<Complex64>,
    /// `∑_{n > n_max} |α_n|²`, summed from the tail terms themselves.
    pub residual: f64,
    pub residual_target: f64,
}

impl ChebCoefficients {
    /// `∑_{n ≤ n_max} |α_n|²`, summed from the smallest terms up.
    pub fn sum_of_squares(&self) -> f64 {
        self.alpha.iter().rev().map(|a| a.norm_sqr()).sum()
    }
}

/// Tail rule used to pick the cutoff.
#[derive(Clone, Copy)]
enum Tail {
    /// `∑_{m>n} |α_m|²`.
    Square,
    /// `∑_{m>n} |α_m| Ũ_m(max(ρ, 2))`, a bound on the state error when
    /// `‖H‖ ≤ ρ`.
    Amplitude { rho: f64 },
}

impl Tail {
    fn ln_term(self, m: usize, ln_abs_alpha: f64) -> f64 {
        match self {
            Tail::Square => 2.0 * ln_abs_alpha,
            Tail::Amplitude { rho } => ln_abs_alpha + ln_cheb_u_above_two(m, rho.max(2.0)),
        }
    }
}

/// Smallest `n ≥ ⌈t⌉ + min_extra` with tail ≤ target; doubling bracket on the
/// table length, capped at `CUTOFF_CAP`.
fn select_cutoff(t: f64, target: f64, rule: Tail, floor: usize) -> Result<(usize, Vec<Complex64>, f64)> {
    let lower = (t.ceil() as usize).max(floor);
    let mut guess = (lower + 16).max(32);
    loop {
        let top = 2 * guess;
        let j = bessel_j_sequence(t, top + 1);
        let alpha = alphas_from_bessel(t, &j, top + 1);
        // terms beyond the table: |α_m| ≤ t^m/m!
        let mut beyond = 0.0;
        {
            let mut ln_bound: f64 = if t == 0.0 {
                f64::NEG_INFINITY
            } else {
                (1..=top).map(|k| t.ln() - (k as f64).ln()).sum()
            };
            let mut last = f64::INFINITY;
            for m in top + 1..top + 100_000 {
                ln_bound += if t == 0.0 { 0.0 } else { t.ln() - (m as f64).ln() };
                let term = rule.ln_term(m, ln_bound).exp();
                beyond += term;
                if term < 1e-300 || (term < last && term < beyond * 1e-17) {
                    break;
                }
                last = term;
            }
        }
        let mut tail = vec![0.0; top + 1];
        let mut acc = beyond;
        for m in (0..=top).rev() {
            tail[m] = acc;
            let a = alpha[m].norm();
            if a > 0.0 {
                acc += rule.ln_term(m, a.ln()).exp();
            }
        }
        if let Some(n) = (lower..=guess).find(|&n| tail[n] <= target) {
            let square_tail: f64 = alpha[n + 1..].iter().rev().map(|a| a.norm_sqr()).sum::<f64>()
                + match rule {
                    Tail::Square => beyond,
                    Tail::Amplitude { .. } => 0.0,
                };
            let mut kept = alpha;
            kept.truncate(n + 1);
            return Ok((n, kept, square_tail));
        }
        if guess >= CUTOFF_CAP {
            return Err(Error::NonConvergence {
                what: "Chebyshev cutoff search".into(),
                iterations: guess,
                estimate: guess as f64,
                residual: tail[guess],
            });
        }
        guess = (guess * 2).min(CUTOFF_CAP);
    }
}

/// Coefficients with the smallest cutoff `n_max ≥ ⌈t⌉` whose squared tail is
/// at most `residual_target`.
pub fn alpha_coefficients(t: f64, residual_target: f64) -> Result<ChebCoefficients> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", "time must be finite and non-negative"));
    }
    if !(residual_target > 0.0 && residual_target <= 1e-6) {
        return Err(Error::invalid("residual_target", "target must lie in (0, 1e-6]"));
    }
    if t == 0.0 {
        return Ok(ChebCoefficients {
            t,
            n_max: 0,
            alpha: vec![Complex64::new(1.0, 0.0)],
            residual: 0.0,
            residual_target,
        });
    }
    let (n_max, alpha, residual) = select_cutoff(t, residual_target, Tail::Square, 0)?;
    Ok(ChebCoefficients {
        t,
        n_max,
        alpha,
        residual,
        residual_target,
    })
}

/// Result of a Chebyshev propagation.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub state: Vec<Complex64>,
    pub t: f64,
    pub n_max: usize,
    /// `∑_{n>n_max}|α_n|²` at the cutoff actually used.
    pub residual: f64,
    /// Certified bound on `‖ψ_t - e^{-itH/2}ψ_0‖ / ‖ψ_0‖` from the series tail.
    pub error_bound: f64,
    pub norm: f64,
    /// `|‖ψ_t‖ - ‖ψ_0‖|`.
    pub norm_defect: f64,
    pub schur_bound: f64,
    pub warnings: Vec<String>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn recurse<H: HermitianOperator + ?Sized>(h: &H, psi0: &[Complex64], alpha: &[Complex64]) -> Vec<Complex64> {
    let n = psi0.len();
    let mut out: Vec<Complex64> = psi0.iter().map(|z| z * alpha[0]).collect();
    if alpha.len() == 1 {
        return out;
    }
    let mut prev = psi0.to_vec();
    let mut cur = vec![Complex64::new(0.0, 0.0); n];
    h.apply(&prev, &mut cur);
    for (o, c) in out.iter_mut().zip(&cur) {
        *o += alpha[1] * c;
    }
    let mut next = vec![Complex64::new(0.0, 0.0); n];
    for a in &alpha[2..] {
        h.apply(&cur, &mut next);
        for ((nx, p), o) in next.iter_mut().zip(&prev).zip(out.iter_mut()) {
            *nx -= p;
            *o += a * *nx;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    out
}

/// `ψ_t = ∑_{n ≤ n_max} α_n(t) Ũ_n(H) ψ_0`.
///
/// The cutoff satisfies both the squared-coefficient rule and the state-error
/// rule `∑_{n>n_max}|α_n| Ũ_n(max(ρ,2)) ≤ target`, with `ρ` the Schur bound,
/// so a large `ρ` enlarges `n_max` instead of breaking convergence.
pub fn propagate<H: HermitianOperator + ?Sized>(
    h: &H,
    psi0: &[Complex64],
    t: f64,
    residual_target: f64,
) -> Result<Propagation> {
    if psi0.len() != h.dim() {
        return Err(Error::invalid("psi0", "initial vector has wrong length"));
    }
    let base = alpha_coefficients(t, residual_target)?;
    let rho = h.schur_bound();
    let mut warnings = Vec::new();
    if rho > 2.5 {
        let msg = format!("Schur bound {rho:.3} exceeds 2.5; Chebyshev cutoff enlarged");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let psi_norm = norm(psi0);
    if t == 0.0 {
        return Ok(Propagation {
            state: psi0.to_vec(),
            t,
            n_max: 0,
            residual: 0.0,
            error_bound: 0.0,
            norm: psi_norm,
            norm_defect: 0.0,
            schur_bound: rho,
            warnings,
        });
    }
    let mut floor = base.n_max;
    let mut attempt = 0;
    loop {
        let (n_max, alpha, residual) = select_cutoff(t, residual_target, Tail::Amplitude { rho }, floor)?;
        let error_bound: f64 = {
            let full = alpha_upto(t, n_max + 200);
            full[n_max + 1..]
                .iter()
                .enumerate()
                .map(|(i, a)| a.norm() * ln_cheb_u_above_two(n_max + 1 + i, rho.max(2.0)).exp())
                .sum()
        };
        let state = recurse(h, psi0, &alpha);
        let nrm = norm(&state);
        let defect = (nrm - psi_norm).abs();
        let rel = if psi_norm > 0.0 { defect / psi_norm } else { defect };
        if rel > NORM_DRIFT && attempt < 3 {
            let msg = format!("norm drift {rel:e} at n_max = {n_max}; rerunning with a larger cutoff");
            log::warn!("{msg}");
            warnings.push(msg);
            floor = n_max + n_max / 2 + 10;
            attempt += 1;
            continue;
        }
        if rel > NORM_DRIFT {
            warnings.push(format!("norm drift {rel:e} persists at n_max = {n_max}"));
        }
        return Ok(Propagation {
            state,
            t,
            n_max,
            residual,
            error_bound,
            norm: nrm,
            norm_defect: defect,
            schur_bound: rho,
            warnings,
        });
    }
}

/// `e^{-itH/2} δ_origin`.
pub fn propagate_site<H: HermitianOperator + ?Sized>(
    h: &H,
    origin: usize,
    t: f64,
    residual_target: f64,
) -> Result<Propagation> {
    let mut psi0 = vec![Complex64::new(0.0, 0.0); h.dim()];
    psi0[origin] = Complex64::new(1.0, 0.0);
    propagate(h, &psi0, t, residual_target)
}

/// Per-site truncated density `∑_{n+n' ≤ n_cut} α_n ᾱ_{n'} (Ũ_n)_{0x} (Ũ_{n'})_{x0}`
/// for one realization, split by the parity of `n + n'`.
#[derive(Debug, Clone)]
pub struct ExpansionDensity {
    pub total: Vec<f64>,
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
    /// Largest imaginary part discarded (should be rounding only).
    pub max_imag: f64,
}

pub fn rho_via_expansion<H: HermitianOperator + ?Sized>(
    h: &H,
    origin: usize,
    t: f64,
    n_cut: usize,
) -> Result<ExpansionDensity> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid("t", "time must be finite and non-negative"));
    }
    let dim = h.dim();
    let alpha = alpha_upto(t, n_cut);
    // c_n(x) = α_n conj(u_n(x)), u_n = Ũ_n(H) δ_0
    let mut c: Vec<Vec<Complex64>> = Vec::with_capacity(n_cut + 1);
    let mut prev = vec![Complex64::new(0.0, 0.0); dim];
    prev[origin] = Complex64::new(1.0, 0.0);
    let mut cur = vec![Complex64::new(0.0, 0.0); dim];
    c.push(prev.iter().map(|u| alpha[0] * u.conj()).collect());
    if n_cut >= 1 {
        h.apply(&prev, &mut cur);
        c.push(cur.iter().map(|u| alpha[1] * u.conj()).collect());
    }
    let mut next = vec![Complex64::new(0.0, 0.0); dim];
    for a in alpha.iter().take(n_cut + 1).skip(2) {
        h.apply(&cur, &mut next);
        for (nx, p) in next.iter_mut().zip(&prev) {
            *nx -= p;
        }
        c.push(next.iter().map(|u| a * u.conj()).collect());
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let mut even = vec![0.0; dim];
    let mut odd = vec![0.0; dim];
    let mut max_imag: f64 = 0.0;
    for x in 0..dim {
        // prefix sums of conj(c_n) split by parity of n
        let mut pre = [Complex64::new(0.0, 0.0); 2];
        let mut prefix = Vec::with_capacity(n_cut + 1);
        for (k, ck) in c.iter().enumerate() {
            pre[k % 2] += ck[x].conj();
            prefix.push(pre);
        }
        let (mut e, mut o) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (n, cn) in c.iter().enumerate() {
            let p = prefix[n_cut - n];
            e += cn[x] * p[n % 2];
            o += cn[x] * p[(n + 1) % 2];
        }
        max_imag = max_imag.max(e.im.abs()).max(o.im.abs());
        even[x] = e.re;
        odd[x] = o.re;
    }
    let total = even.iter().zip(&odd).map(|(a, b)| a + b).collect();
    Ok(ExpansionDensity {
        total,
        even,
        odd,
        max_imag,
    })
}

/// `e^{-itH/2}ψ_0` by dense eigendecomposition; the oracle for small `H`.
pub fn exact_evolution<H: HermitianOperator + ?Sized>(h: &H, psi0: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if psi0.len() != h.dim() {
        return Err(Error::invalid("psi0", "initial vector has wrong length"));
    }
    if h.dim() > 4096 {
        return Err(Error::SizeCap(format!("dense evolution capped at 4096, got {}", h.dim())));
    }
    let eig = nalgebra::SymmetricEigen::new(h.to_dense());
    let v = &eig.eigenvectors;
    let psi = nalgebra::DVector::from_column_slice(psi0);
    let mut c = v.adjoint() * psi;
    for (ck, &l) in c.iter_mut().zip(eig.eigenvalues.iter()) {
        *ck *= Complex64::from_polar(1.0, -t * l / 2.0);
    }
    Ok((v * c).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DenseHermitian;
    use proptest::prelude::*;

    fn bessel_series(n: usize, t: f64) -> f64 {
        let mut term = (t / 2.0).powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>();
        let mut sum = 0.0;
        for k in 0..200 {
            sum += term;
            term *= -(t / 2.0) * (t / 2.0) / ((k + 1) as f64 * (k + 1 + n) as f64);
            if term.abs() < 1e-30 {
                break;
            }
        }
        sum
    }

    #[test]
    fn cheb_u_small_cases() {
        assert_eq!(cheb_u(2, 2.0), 3.0);
        for n in 0..=20 {
            assert_eq!(cheb_u(n, 2.0), (n + 1) as f64);
        }
        let theta = (0.6f64).acos();
        assert!((cheb_u(5, 1.2) - (6.0 * theta).sin() / theta.sin()).abs() < 1e-12);
    }

    #[test]
    fn trigonometric_form_on_grid() {
        for i in 0..=29 {
            let theta = 0.1 + 2.9 * i as f64 / 29.0;
            let u = cheb_u_all(50, 2.0 * theta.cos());
            for (n, v) in u.iter().enumerate() {
                assert!((v * theta.sin() - ((n + 1) as f64 * theta).sin()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn log_weight_matches_recursion() {
        for rho in [2.0, 2.1, 2.7, 4.0] {
            for n in [0usize, 1, 5, 30] {
                let exact = cheb_u(n, rho);
                assert!((ln_cheb_u_above_two(n, rho) - exact.ln()).abs() < 1e-10, "{rho} {n}");
            }
        }
    }

    #[test]
    fn bessel_against_power_series() {
        for t in [0.1, 1.0, 3.0, 7.5] {
            let j = bessel_j_sequence(t, 30);
            for (n, v) in j.iter().enumerate() {
                assert!((v - bessel_series(n, t)).abs() < 1e-13, "J_{n}({t})");
            }
        }
    }

    #[test]
    fn miller_start_is_converged() {
        // a much deeper start must not change the table
        for t in [1.0, 10.0, 50.0, 200.0] {
            let top = 2 * (t as usize + 40);
            let a = bessel_j_sequence(t, top);
            let b = bessel_j_sequence(t, top + 200)[..=top].to_vec();
            for (x, y) in a.iter().zip(&b).take(top / 2) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn alpha_one_at_unit_time() {
        let c = alpha_coefficients(1.0, 1e-12).unwrap();
        let expect = 4.0 * bessel_series(2, 1.0);
        assert!((c.alpha[1].im + expect).abs() < 1e-12);
        assert!(c.alpha[1].re == 0.0);
    }

    #[test]
    fn alpha_identity_and_bounds() {
        for t in [1.0, 10.0, 50.0, 200.0] {
            let c = alpha_coefficients(t, 1e-12).unwrap();
            let s = c.sum_of_squares();
            assert!(s >= 1.0 - 1e-12 && s <= 1.0, "t={t}: {s}");
            assert!(c.n_max >= t.ceil() as usize);
            assert!(c.residual <= 1e-12);
            let mut ln_bound = 0.0;
            for (n, a) in c.alpha.iter().enumerate() {
                if n > 0 {
                    ln_bound += t.ln() - (n as f64).ln();
                }
                assert!(a.norm() <= 1.0 + 1e-15);
                assert!(a.norm() <= ln_bound.exp() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn alpha_at_zero() {
        let c = alpha_coefficients(0.0, 1e-12).unwrap();
        assert_eq!(c.alpha, vec![Complex64::new(1.0, 0.0)]);
        assert!(alpha_coefficients(-1.0, 1e-12).is_err());
        assert!(alpha_coefficients(1.0, 1e-3).is_err());
    }

    #[test]
    fn cutoff_is_minimal() {
        let c = alpha_coefficients(10.0, 1e-12).unwrap();
        let longer = alpha_upto(10.0, c.n_max + 60);
        let tail_before: f64 = longer[c.n_max..].iter().map(|a| a.norm_sqr()).sum();
        assert!(tail_before > 1e-12);
    }

    #[test]
    fn two_level_oracle() {
        let h = DenseHermitian::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let p = propagate_site(&h, 0, std::f64::consts::PI, 1e-12).unwrap();
        assert!(p.state[0].norm() < 1e-10);
        assert!((p.state[1] - Complex64::new(0.0, -1.0)).norm() < 1e-10);
    }

    #[test]
    fn zero_time_is_identity() {
        let h = DenseHermitian::from_real(&[&[0.3, 1.0], &[1.0, -0.2]]).unwrap();
        let p = propagate_site(&h, 1, 0.0, 1e-12).unwrap();
        assert_eq!(p.state, vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn large_norm_enlarges_cutoff() {
        let h = DenseHermitian::from_real(&[&[0.0, 2.6], &[2.6, 0.0]]).unwrap();
        let t = 4.0;
        let p = propagate_site(&h, 0, t, 1e-14).unwrap();
        assert!(!p.warnings.is_empty());
        // exact: eigenvalues ±2.6 → ψ_0 = cos(1.3 t), ψ_1 = -i sin(1.3 t)
        assert!((p.state[0].re - (1.3 * t).cos()).abs() < 1e-12);
        assert!((p.state[1].im + (1.3 * t).sin()).abs() < 1e-12);
    }

    #[test]
    fn expansion_density_resums() {
        let h = DenseHermitian::from_real(&[
            &[0.1, 0.5, 0.0],
            &[0.5, -0.3, 0.7],
            &[0.0, 0.7, 0.2],
        ])
        .unwrap();
        let t = 2.5;
        let p = propagate_site(&h, 0, t, 1e-16).unwrap();
        let r = rho_via_expansion(&h, 0, t, 2 * p.n_max + 20).unwrap();
        for (x, a) in p.state.iter().enumerate() {
            assert!((r.total[x] - a.norm_sqr()).abs() < 1e-10);
        }
        let r0 = rho_via_expansion(&h, 0, 0.0, 6).unwrap();
        assert_eq!(r0.total, vec![1.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn rough_chebyshev_growth(n in 0usize..40, xi in -6.0f64..6.0) {
            let bound = (n + 1) as f64 * 2f64.powi(n as i32) * (1.0 + xi.abs()).powi(n as i32);
            prop_assert!(cheb_u(n, xi).abs() <= bound);
        }

        #[test]
        fn propagation_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            use rand::Rng;
            let mut rng = crate::rng::stream(seed, 0);
            let n = 5;
            let mut m = nalgebra::DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
            for i in 0..n {
                m[(i, i)] = Complex64::new(rng.random_range(-0.5..0.5), 0.0);
                for j in 0..i {
                    let z = Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            let h = DenseHermitian::new(m).unwrap();
            let u: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let w: Vec<Complex64> = u.iter().zip(&v).map(|(x, y)| x * a + y * b).collect();
            let t = 3.0;
            let pu = propagate(&h, &u, t, 1e-16).unwrap();
            let pv = propagate(&h, &v, t, 1e-16).unwrap();
            let pw = propagate(&h, &w, t, 1e-16).unwrap();
            // cutoffs depend only on (t, ρ), so the same polynomial is applied
            prop_assert_eq!(pu.n_max, pw.n_max);
            for i in 0..n {
                let lin = pu.state[i] * a + pv.state[i] * b;
                prop_assert!((pw.state[i] - lin).norm() < 1e-12);
            }
        }
    }
}
