//! Nonbacktracking powers `V_n` of a small dense Hermitian matrix, their
//! recursion through `Φ₂`, `Φ₃`, and the path expansion of `Ũ_n(H)`.
//!
//! Everything here is dense and exponential in the worst case; it exists to
//! check exact identities at toy sizes.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::stream;

pub type CMatrix = DMatrix<Complex64>;

const DIRECT_MAX_DIM: usize = 16;
const DIRECT_MAX_N: usize = 6;
const EXPANSION_MAX_N: usize = 8;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `Φ₂ = diag(∑_z |H_xz|² - 1)` and `Φ₃ = -|H|² ∘ H`.
#[derive(Debug, Clone)]
pub struct RenormalizationMatrices {
    pub phi2: CMatrix,
    pub phi3: CMatrix,
}

impl RenormalizationMatrices {
    pub fn new(h: &CMatrix) -> Self {
        let n = h.nrows();
        let mut phi2 = CMatrix::from_element(n, n, zero());
        for x in 0..n {
            let s: f64 = h.row(x).iter().map(|z| z.norm_sqr()).sum();
            phi2[(x, x)] = Complex64::new(s - 1.0, 0.0);
        }
        let phi3 = h.map(|z| -z * z.norm_sqr());
        RenormalizationMatrices { phi2, phi3 }
    }
}

/// `∑ ∏ 1{x_i ≠ x_{i+2}} M_1[x_0,x_1] M_2[x_1,x_2] ⋯` over all inner labels.
///
/// The running tensor is indexed by `(x_0, x_{k-1}, x_k)` so the two-back
/// label is available for the constraint. An empty chain is the identity.
pub fn nonbacktracking_chain(factors: &[&CMatrix]) -> CMatrix {
    let n = factors.first().map(|m| m.nrows()).unwrap_or(0);
    let Some((first, rest)) = factors.split_first() else {
        return CMatrix::identity(n, n);
    };
    let idx = |s: usize, a: usize, b: usize| (s * n + a) * n + b;
    let mut t = vec![zero(); n * n * n];
    for s in 0..n {
        for c in 0..n {
            t[idx(s, s, c)] = first[(s, c)];
        }
    }
    let mut next = vec![zero(); n * n * n];
    for m in rest {
        next.iter_mut().for_each(|z| *z = zero());
        for s in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let v = t[idx(s, a, b)];
                    if v == zero() {
                        continue;
                    }
                    for c in 0..n {
                        if c != a {
                            next[idx(s, b, c)] += v * m[(b, c)];
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut t, &mut next);
    }
    let mut out = CMatrix::from_element(n, n, zero());
    for s in 0..n {
        for b in 0..n {
            for c in 0..n {
                out[(s, c)] += t[idx(s, b, c)];
            }
        }
    }
    out
}

/// `ul(Φ₃ V_ℓ)`, with `ul(Φ₃ V_0) = Φ₃`.
pub fn underlined_phi3(h: &CMatrix, phi3: &CMatrix, ell: usize) -> CMatrix {
    let mut factors = vec![phi3];
    factors.extend(std::iter::repeat_n(h, ell));
    nonbacktracking_chain(&factors)
}

/// `V_0, …, V_n` by summing every nonbacktracking path explicitly.
pub fn vn_direct(h: &CMatrix, n: usize) -> Result<Vec<CMatrix>> {
    let dim = h.nrows();
    if dim > DIRECT_MAX_DIM {
        return Err(Error::SizeCap(format!(
            "direct path sum needs N^d ≤ {DIRECT_MAX_DIM}, got {dim}"
        )));
    }
    if n > DIRECT_MAX_N {
        return Err(Error::SizeCap(format!("direct path sum needs n ≤ {DIRECT_MAX_N}, got {n}")));
    }
    let mut out = vec![CMatrix::from_element(dim, dim, zero()); n + 1];
    let mut path = Vec::with_capacity(n + 1);
    for x0 in 0..dim {
        path.clear();
        path.push(x0);
        walk(h, n, &mut path, Complex64::new(1.0, 0.0), &mut out);
    }
    Ok(out)
}

fn walk(h: &CMatrix, n: usize, path: &mut Vec<usize>, weight: Complex64, out: &mut [CMatrix]) {
    let len = path.len() - 1;
    let last = path[len];
    out[len][(path[0], last)] += weight;
    if len == n {
        return;
    }
    for y in 0..h.ncols() {
        if len >= 1 && path[len - 1] == y {
            continue;
        }
        let w = weight * h[(last, y)];
        if w == zero() {
            continue;
        }
        path.push(y);
        walk(h, n, path, w, out);
        path.pop();
    }
}

/// `V_0, …, V_n` from `V_n = H V_{n-1} - V_{n-2} - Φ₂ V_{n-2} - ul(Φ₃ V_{n-3})`.
pub fn vn_recursive(h: &CMatrix, n: usize) -> Vec<CMatrix> {
    let dim = h.nrows();
    let r = RenormalizationMatrices::new(h);
    let id = CMatrix::identity(dim, dim);
    let mut v: Vec<CMatrix> = Vec::with_capacity(n + 1);
    v.push(id.clone());
    if n >= 1 {
        v.push(h.clone());
    }
    for k in 2..=n {
        let mut next = h * &v[k - 1] - &v[k - 2] - &r.phi2 * &v[k - 2];
        if k >= 3 {
            next -= underlined_phi3(h, &r.phi3, k - 3);
        }
        v.push(next);
    }
    v
}

/// `Ũ_0(H), …, Ũ_n(H)` by the three-term recursion.
pub fn cheb_u_matrices(h: &CMatrix, n: usize) -> Vec<CMatrix> {
    let dim = h.nrows();
    let mut u = vec![CMatrix::identity(dim, dim)];
    if n >= 1 {
        u.push(h.clone());
    }
    for k in 2..=n {
        let next = h * &u[k - 1] - &u[k - 2];
        u.push(next);
    }
    u
}

/// One term of the path expansion: `ℓ_0` and the blocks `(a_i, ℓ_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex {
    pub ell0: usize,
    pub blocks: Vec<(u8, usize)>,
}

/// All multi-indices `(k, a, ℓ)` with `ℓ_0 + … + ℓ_k + |a| = n`.
pub fn multi_indices(n: usize) -> Vec<MultiIndex> {
    fn blocks(rem: usize, cur: &mut Vec<(u8, usize)>, out: &mut Vec<Vec<(u8, usize)>>) {
        if rem == 0 {
            out.push(cur.clone());
        }
        for a in [2u8, 3] {
            let a_us = a as usize;
            if a_us > rem {
                continue;
            }
            for ell in 0..=rem - a_us {
                cur.push((a, ell));
                blocks(rem - a_us - ell, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    for ell0 in 0..=n {
        let mut tails = Vec::new();
        blocks(n - ell0, &mut Vec::new(), &mut tails);
        out.extend(tails.into_iter().map(|b| MultiIndex { ell0, blocks: b }));
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExpansionCheck {
    pub n: usize,
    pub terms: usize,
    /// `max |U_n^{expansion} - Ũ_n(H)|` entrywise.
    pub residual: f64,
}

/// Sum the path expansion of `U_n` and compare with `Ũ_n(H)`.
pub fn path_expansion_check(h: &CMatrix, n: usize) -> Result<ExpansionCheck> {
    if h.nrows() > DIRECT_MAX_DIM {
        return Err(Error::SizeCap(format!(
            "path expansion needs N^d ≤ {DIRECT_MAX_DIM}, got {}",
            h.nrows()
        )));
    }
    if n > EXPANSION_MAX_N {
        return Err(Error::SizeCap(format!("path expansion needs n ≤ {EXPANSION_MAX_N}, got {n}")));
    }
    let dim = h.nrows();
    let r = RenormalizationMatrices::new(h);
    let v = vn_recursive(h, n);
    let ul2: Vec<CMatrix> = v.iter().map(|vl| &r.phi2 * vl).collect();
    let ul3: Vec<CMatrix> = (0..=n).map(|l| underlined_phi3(h, &r.phi3, l)).collect();
    let indices = multi_indices(n);
    let mut total = CMatrix::from_element(dim, dim, zero());
    for mi in &indices {
        let mut term = v[mi.ell0].clone();
        for &(a, ell) in &mi.blocks {
            term = if a == 2 { term * &ul2[ell] } else { term * &ul3[ell] };
        }
        total += term;
    }
    let u = cheb_u_matrices(h, n);
    let residual = (total - &u[n]).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(ExpansionCheck {
        n,
        terms: indices.len(),
        residual,
    })
}

/// Random Hermitian matrix with complex Gaussian entries of variance `1/n`
/// (real symmetric if `complex` is false); used by the identity suites.
pub fn random_hermitian(n: usize, complex: bool, seed: u64) -> CMatrix {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = stream(seed, 0);
    let s = 1.0 / (n as f64).sqrt();
    let mut m = CMatrix::from_element(n, n, zero());
    for i in 0..n {
        let d: f64 = StandardNormal.sample(&mut rng);
        m[(i, i)] = Complex64::new(d * s, 0.0);
        for j in 0..i {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = if complex { StandardNormal.sample(&mut rng) } else { 0.0 };
            let scale = if complex { s * std::f64::consts::FRAC_1_SQRT_2 } else { s };
            let z = Complex64::new(re, im) * scale;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

pub fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swap() -> CMatrix {
        DMatrix::from_fn(2, 2, |i, j| Complex64::new(if i == j { 0.0 } else { 1.0 }, 0.0))
    }

    #[test]
    fn swap_matrix_has_no_nonbacktracking_square() {
        let h = swap();
        let r = RenormalizationMatrices::new(&h);
        assert!(r.phi2.iter().all(|z| *z == zero()));
        let d = vn_direct(&h, 2).unwrap();
        assert!(d[2].iter().all(|z| *z == zero()));
        let v = vn_recursive(&h, 2);
        assert!(v[2].iter().all(|z| *z == zero()));
        assert_eq!(d[0], CMatrix::identity(2, 2));
        assert_eq!(d[1], h);
    }

    #[test]
    fn recursion_matches_direct_sum() {
        for seed in 0..6 {
            for (n, complex) in [(8, true), (6, false), (5, true)] {
                let h = random_hermitian(n, complex, seed);
                let d = vn_direct(&h, 5).unwrap();
                let r = vn_recursive(&h, 5);
                for k in 0..=5 {
                    assert!(max_entry_diff(&d[k], &r[k]) < 1e-10, "seed {seed} n {k}");
                }
            }
        }
    }

    #[test]
    fn expansion_reproduces_chebyshev() {
        let h = random_hermitian(6, true, 3);
        for n in 0..=8 {
            let c = path_expansion_check(&h, n).unwrap();
            assert!(c.residual <= 1e-9, "n={n}: {}", c.residual);
        }
        let two = path_expansion_check(&h, 2).unwrap();
        assert!(two.residual < 1e-14);
    }

    #[test]
    fn multi_index_count_is_tribonacci() {
        let expect = [1usize, 1, 2, 4, 7, 13, 24, 44, 81];
        for (n, &c) in expect.iter().enumerate() {
            assert_eq!(multi_indices(n).len(), c);
        }
    }

    #[test]
    fn unit_row_variance_kills_phi2() {
        // each row of a scaled permutation-like matrix has ∑|H|² = 1
        let h = DMatrix::from_fn(3, 3, |i, j| {
            let v = if i == j { 0.0 } else { std::f64::consts::FRAC_1_SQRT_2 };
            Complex64::new(v, 0.0)
        });
        let r = RenormalizationMatrices::new(&h);
        assert!(r.phi2.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn size_caps() {
        let h = random_hermitian(17, false, 0);
        assert!(matches!(vn_direct(&h, 2), Err(Error::SizeCap(_))));
        let h = random_hermitian(4, false, 0);
        assert!(matches!(vn_direct(&h, 7), Err(Error::SizeCap(_))));
    }
}
