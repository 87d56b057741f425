use std::sync::Arc;

use crate::error::{Error, Result};

use super::lattice::Lattice;
use super::shape::ShapeFunction;

/// Variance profile `σ²_xy = f([x-y]_N / W) / M` on a periodic lattice.
///
/// The profile is translation invariant, so it is stored as the list of
/// reduced offsets `o` with `f(o/W) > 0` together with their variances and a
/// precomputed neighbour table `nb[x*K + k] = [x + o_k]_N`.
#[derive(Debug, Clone)]
pub struct BandProfile {
    lattice: Lattice,
    width: usize,
    shape: ShapeFunction,
    norm: f64,
    offsets: Vec<Vec<i64>>,
    variances: Vec<f64>,
    reverse: Vec<usize>,
    neighbors: Arc<Vec<u32>>,
    warnings: Vec<String>,
}

impl BandProfile {
    pub fn new(lattice: Lattice, width: usize, shape: ShapeFunction) -> Result<Self> {
        if shape.dim() != lattice.dim() {
            return Err(Error::invalid("shape", "shape dimension differs from lattice dimension"));
        }
        if width == 0 {
            return Err(Error::invalid("W", "band width must be at least 1"));
        }
        if width > lattice.side() {
            return Err(Error::invalid(
                "W",
                format!("band width {} exceeds side length {}", width, lattice.side()),
            ));
        }
        let d = lattice.dim();
        let w = width as f64;
        let r = (shape.support_radius() * w).floor() as i64;
        let lo = lattice.min_coord().max(-r);
        let hi = lattice.max_coord().min(r);

        // lexicographic sweep of the cube [lo, hi]^d, so `offsets` is sorted
        let span = (hi - lo + 1) as usize;
        let mut offsets = Vec::new();
        let mut values = Vec::new();
        let mut scaled = vec![0.0; d];
        for linear in 0..span.pow(d as u32) {
            let mut o = vec![0i64; d];
            let mut rest = linear;
            for c in o.iter_mut().rev() {
                *c = lo + (rest % span) as i64;
                rest /= span;
            }
            for (s, &c) in scaled.iter_mut().zip(&o) {
                *s = c as f64 / w;
            }
            let v = shape.eval(&scaled);
            if v > 0.0 {
                offsets.push(o);
                values.push(v);
            }
        }

        let norm: f64 = pairwise_sum(&values);
        if !(norm > 0.0) {
            return Err(Error::invalid("shape", "shape has zero mass on the lattice (M = 0)"));
        }
        let variances: Vec<f64> = values.iter().map(|v| v / norm).collect();

        let reverse = offsets
            .iter()
            .map(|o| {
                let neg: Vec<i64> = o.iter().map(|&c| -c).collect();
                let neg = lattice.reduce(&neg);
                offsets
                    .binary_search(&neg)
                    .expect("offset set is closed under negation")
            })
            .collect();

        let k = offsets.len();
        let mut neighbors = vec![0u32; lattice.size() * k];
        let mut p = vec![0i64; d];
        let mut q = vec![0i64; d];
        for x in 0..lattice.size() {
            lattice.point_into(x, &mut p);
            for (slot, off) in neighbors[x * k..(x + 1) * k].iter_mut().zip(&offsets) {
                for ((qi, &pi), &oi) in q.iter_mut().zip(&p).zip(off) {
                    *qi = pi + oi;
                }
                *slot = lattice.index(&q) as u32;
            }
        }

        let mut warnings = Vec::new();
        let n = lattice.side() as f64;
        if n < w * norm.powf(1.0 / 6.0) {
            warnings.push(format!(
                "N = {} is below W·M^(1/6) = {:.3}; outside the diffusive regime",
                lattice.side(),
                w * norm.powf(1.0 / 6.0)
            ));
        }
        let upper = w.powi(10 * d as i32 + 16);
        if n > upper {
            warnings.push(format!("N = {} exceeds W^(10d+16)", lattice.side()));
        }
        for msg in &warnings {
            log::warn!("{msg}");
        }

        Ok(BandProfile {
            lattice,
            width,
            shape,
            norm,
            offsets,
            variances,
            reverse,
            neighbors: Arc::new(neighbors),
            warnings,
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> &ShapeFunction {
        &self.shape
    }

    /// Normalization `M = ∑_x f([x]_N / W)`.
    pub fn m(&self) -> f64 {
        self.norm
    }

    /// Largest single variance, `max σ²_xy`.
    pub fn max_variance(&self) -> f64 {
        self.variances.iter().cloned().fold(0.0, f64::max)
    }

    /// Number of stored offsets per row.
    pub fn row_len(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    pub fn offset_variances(&self) -> &[f64] {
        &self.variances
    }

    /// Position of `[-o_k]_N` in the offset list.
    pub fn reverse_offset(&self, k: usize) -> usize {
        self.reverse[k]
    }

    pub fn neighbors(&self) -> &[u32] {
        &self.neighbors
    }

    pub fn neighbor(&self, x: usize, k: usize) -> usize {
        self.neighbors[x * self.offsets.len() + k] as usize
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Offset slot of the pair `(x, y)`, if `σ²_xy > 0`.
    pub fn offset_index(&self, x: usize, y: usize) -> Option<usize> {
        let diff = self
            .lattice
            .difference(&self.lattice.point(y), &self.lattice.point(x));
        self.offsets.binary_search(&diff).ok()
    }

    /// `σ²_xy`, evaluated from the definition.
    pub fn sigma2(&self, x: usize, y: usize) -> f64 {
        let diff = self
            .lattice
            .difference(&self.lattice.point(x), &self.lattice.point(y));
        let w = self.width as f64;
        let scaled: Vec<f64> = diff.iter().map(|&c| c as f64 / w).collect();
        self.shape.eval(&scaled) / self.norm
    }

    /// `∑_y σ²_xy` accumulated over the full row.
    pub fn row_sum(&self, x: usize) -> f64 {
        (0..self.lattice.size()).map(|y| self.sigma2(x, y)).sum()
    }

    /// Discrete first moment `∑_x σ²_{0x} x`.
    pub fn discrete_first_moment(&self) -> Vec<f64> {
        let d = self.lattice.dim();
        let mut m = vec![0.0; d];
        for (o, s) in self.offsets.iter().zip(&self.variances) {
            for (mi, &c) in m.iter_mut().zip(o) {
                *mi += s * c as f64;
            }
        }
        m
    }

    /// Discrete covariance `∑_x σ²_{0x} (x/W)(x/W)^T`.
    pub fn discrete_covariance(&self) -> Vec<Vec<f64>> {
        let d = self.lattice.dim();
        let w = self.width as f64;
        let mut c = vec![vec![0.0; d]; d];
        for (o, s) in self.offsets.iter().zip(&self.variances) {
            for i in 0..d {
                for j in 0..d {
                    c[i][j] += s * (o[i] as f64 / w) * (o[j] as f64 / w);
                }
            }
        }
        c
    }
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::shape::ShapeKind;

    #[test]
    fn box_profile_normalization() {
        let p = BandProfile::new(Lattice::new(1, 100).unwrap(), 4, ShapeFunction::boxed(1)).unwrap();
        assert!((p.m() - 4.5).abs() < 1e-14);
        let o = p.lattice().origin();
        for y in 0..100 {
            let dist = p.lattice().distance(&p.lattice().point(o), &p.lattice().point(y));
            let expect = if dist <= 4.0 { 1.0 / 9.0 } else { 0.0 };
            assert!((p.sigma2(o, y) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn rows_sum_to_one() {
        for kind in [ShapeKind::Box, ShapeKind::Triangular, ShapeKind::Gaussian] {
            let lat = Lattice::new(2, 20).unwrap();
            let p = BandProfile::new(lat, 3, ShapeFunction::new(kind, 2, 1.0).unwrap()).unwrap();
            for x in [0, 17, 133, 399] {
                assert!((p.row_sum(x) - 1.0).abs() < 1e-12);
            }
            let stored: f64 = p.offset_variances().iter().sum();
            assert!((stored - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrapping_band_dedupes_offsets() {
        let p = BandProfile::new(Lattice::new(1, 8).unwrap(), 8, ShapeFunction::boxed(1)).unwrap();
        assert_eq!(p.row_len(), 8);
        assert!((p.row_sum(3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_wide_band() {
        let err = BandProfile::new(Lattice::new(1, 10).unwrap(), 11, ShapeFunction::boxed(1)).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn neighbour_and_reverse_tables_agree() {
        let p = BandProfile::new(Lattice::new(2, 9).unwrap(), 2, ShapeFunction::boxed(2)).unwrap();
        for x in [0, 5, 40, 80] {
            for k in 0..p.row_len() {
                let y = p.neighbor(x, k);
                assert_eq!(p.neighbor(y, p.reverse_offset(k)), x);
                assert_eq!(p.offset_index(x, y), Some(k));
            }
        }
    }
}
