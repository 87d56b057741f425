use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::operator::HermitianOperator;
use crate::rng::stream;

use super::distribution::EntryDistribution;
use super::profile::BandProfile;

const DENSE_CAP: usize = 4096;

/// One realization `H_xy = σ_xy A_xy` stored as full rows over the offset list
/// of its profile: `entries[x*K + k] = H_{x, x+o_k}`.
///
/// Both triangles are kept so that the matrix-vector product is a plain
/// row gather. The lower triangle is written as the exact conjugate
/// of the upper one, so Hermiticity holds bit for bit.
#[derive(Debug, Clone)]
pub struct BandMatrixSample {
    profile: Arc<BandProfile>,
    dist: EntryDistribution,
    entries: Vec<Complex64>,
    seed: u64,
    realization_index: u64,
}

impl BandMatrixSample {
    /// Draw the realization `(seed, realization_index)`.
    ///
    /// Entries are drawn from a private stream in a fixed order (rows, then
    /// owned offsets), so the result does not depend on who calls it or how
    /// many threads are running.
    pub fn sample(
        profile: Arc<BandProfile>,
        dist: EntryDistribution,
        seed: u64,
        realization_index: u64,
    ) -> Self {
        let mut rng = stream(seed, realization_index);
        let k = profile.row_len();
        let size = profile.lattice().size();
        let cutoff = dist.cutoff(profile.m());
        let sigmas: Vec<f64> = profile.offset_variances().iter().map(|v| v.sqrt()).collect();
        let zero = profile
            .offsets()
            .iter()
            .position(|o| o.iter().all(|&c| c == 0));
        let mut entries = vec![Complex64::new(0.0, 0.0); size * k];
        for x in 0..size {
            for j in 0..k {
                let y = profile.neighbor(x, j);
                let r = profile.reverse_offset(j);
                if Some(j) == zero {
                    let a = dist.sample_diag(&mut rng, cutoff);
                    entries[x * k + j] = Complex64::new(sigmas[j] * a, 0.0);
                } else if (r != j && j > r) || (r == j && x < y) {
                    let h = dist.sample_offdiag(&mut rng, cutoff) * sigmas[j];
                    entries[x * k + j] = h;
                    entries[y * k + r] = h.conj();
                }
            }
        }
        BandMatrixSample {
            profile,
            dist,
            entries,
            seed,
            realization_index,
        }
    }

    pub fn profile(&self) -> &BandProfile {
        &self.profile
    }

    pub fn distribution(&self) -> &EntryDistribution {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn realization_index(&self) -> u64 {
        self.realization_index
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `H_xy`, zero outside the band.
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        match self.profile.offset_index(x, y) {
            Some(j) => self.entries[x * self.profile.row_len() + j],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Stored entries with `x ≤ y`, as `(x, y, H_xy)`.
    pub fn upper_triangle(&self) -> Vec<(usize, usize, Complex64)> {
        let k = self.profile.row_len();
        let mut out = Vec::new();
        for x in 0..self.dim() {
            for j in 0..k {
                let y = self.profile.neighbor(x, j);
                if y >= x {
                    out.push((x, y, self.entries[x * k + j]));
                }
            }
        }
        out.sort_by_key(|&(x, y, _)| (x, y));
        out
    }

    /// Largest entry magnitude divided by its standard deviation.
    pub fn max_normalized_entry(&self) -> f64 {
        let k = self.profile.row_len();
        let sig: Vec<f64> = self.profile.offset_variances().iter().map(|v| v.sqrt()).collect();
        self.entries
            .iter()
            .enumerate()
            .map(|(i, h)| h.norm() / sig[i % k])
            .fold(0.0, f64::max)
    }

    pub fn dense_allowed(&self) -> bool {
        self.dim() <= DENSE_CAP
    }

    fn row_product(&self, x: usize, v: &[Complex64]) -> Complex64 {
        let k = self.profile.row_len();
        let nb = &self.profile.neighbors()[x * k..(x + 1) * k];
        let row = &self.entries[x * k..(x + 1) * k];
        let mut acc = Complex64::new(0.0, 0.0);
        for (h, &y) in row.iter().zip(nb) {
            acc += h * v[y as usize];
        }
        acc
    }
}

impl HermitianOperator for BandMatrixSample {
    fn dim(&self) -> usize {
        self.profile.lattice().size()
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(v.len(), self.dim());
        assert_eq!(out.len(), self.dim());
        for (x, o) in out.iter_mut().enumerate() {
            *o = self.row_product(x, v);
        }
    }

    fn max_abs_row_sum(&self) -> f64 {
        let k = self.profile.row_len();
        self.entries
            .chunks(k)
            .map(|row| row.iter().map(|h| h.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn max_abs_col_sum(&self) -> f64 {
        // columns are conjugated rows
        self.max_abs_row_sum()
    }

    fn is_real(&self) -> bool {
        !self.dist.complex
    }

    fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let k = self.profile.row_len();
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for x in 0..n {
            for j in 0..k {
                m[(x, self.profile.neighbor(x, j))] = self.entries[x * k + j];
            }
        }
        m
    }
}
