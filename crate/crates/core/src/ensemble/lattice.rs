use crate::error::{Error, Result};

/// Periodic `d`-dimensional cube of side `N`, centred at the origin.
///
/// Coordinates of a reduced point lie in `{-⌊N/2⌋, …, N-1-⌊N/2⌋}`. Sites are
/// indexed row-major with the first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    dim: usize,
    side: usize,
    size: usize,
}

impl Lattice {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("d", "dimension must be positive"));
        }
        if side == 0 {
            return Err(Error::invalid("N", "side length must be positive"));
        }
        let size = (0..dim)
            .try_fold(1usize, |acc, _| acc.checked_mul(side))
            .filter(|&s| s <= u32::MAX as usize)
            .ok_or_else(|| Error::invalid("N", format!("lattice {side}^{dim} is too large")))?;
        Ok(Lattice { dim, side, size })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of sites, `N^d`.
    pub fn size(&self) -> usize {
        self.size
    }

    fn half(&self) -> i64 {
        (self.side / 2) as i64
    }

    /// Smallest coordinate of the centred box.
    pub fn min_coord(&self) -> i64 {
        -self.half()
    }

    /// Largest coordinate of the centred box.
    pub fn max_coord(&self) -> i64 {
        self.side as i64 - 1 - self.half()
    }

    /// `[c]_N` for a single coordinate.
    pub fn reduce_coord(&self, c: i64) -> i64 {
        let n = self.side as i64;
        (c + self.half()).rem_euclid(n) - self.half()
    }

    /// `[x]_N`: the representative of `x` in the centred box.
    pub fn reduce(&self, x: &[i64]) -> Vec<i64> {
        assert_eq!(x.len(), self.dim, "point has wrong dimension");
        x.iter().map(|&c| self.reduce_coord(c)).collect()
    }

    /// Site index of an arbitrary integer point (reduced first).
    pub fn index(&self, x: &[i64]) -> usize {
        assert_eq!(x.len(), self.dim, "point has wrong dimension");
        let n = self.side as i64;
        x.iter().fold(0usize, |acc, &c| {
            let o = (c + self.half()).rem_euclid(n) as usize;
            acc * self.side + o
        })
    }

    /// Reduced coordinates of site `index`.
    pub fn point(&self, index: usize) -> Vec<i64> {
        let mut p = vec![0i64; self.dim];
        self.point_into(index, &mut p);
        p
    }

    pub fn point_into(&self, mut index: usize, out: &mut [i64]) {
        debug_assert!(index < self.size);
        for slot in out.iter_mut().rev() {
            *slot = (index % self.side) as i64 - self.half();
            index /= self.side;
        }
    }

    pub fn origin(&self) -> usize {
        self.index(&vec![0; self.dim])
    }

    /// Reduced difference `[x - y]_N`.
    pub fn difference(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        x.iter().zip(y).map(|(a, b)| self.reduce_coord(a - b)).collect()
    }

    /// Periodic Euclidean distance `|[x - y]_N|`.
    pub fn distance(&self, x: &[i64], y: &[i64]) -> f64 {
        self.difference(x, y)
            .iter()
            .map(|&c| (c * c) as f64)
            .sum::<f64>()
            .sqrt()
    }

    /// All reduced points, in index order.
    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.size).map(move |i| self.point(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduction_examples() {
        let l1 = Lattice::new(1, 10).unwrap();
        assert_eq!(l1.reduce(&[7]), vec![-3]);
        assert_eq!(l1.distance(&[7], &[0]), 3.0);
        assert_eq!(l1.reduce(&[0]), vec![0]);
        let l2 = Lattice::new(2, 6).unwrap();
        assert_eq!(l2.reduce(&[5, -4]), vec![-1, 2]);
    }

    #[test]
    fn index_round_trip_and_range() {
        let l = Lattice::new(2, 5).unwrap();
        for i in 0..l.size() {
            let p = l.point(i);
            assert_eq!(l.index(&p), i);
            assert!(p.iter().all(|&c| c >= l.min_coord() && c <= l.max_coord()));
        }
        assert_eq!(l.point(l.origin()), vec![0, 0]);
    }

    #[test]
    fn rejects_degenerate_lattices() {
        assert!(Lattice::new(0, 4).is_err());
        assert!(Lattice::new(2, 0).is_err());
    }

    proptest! {
        #[test]
        fn reduce_is_congruent_and_in_range(n in 1usize..40, c in -500i64..500) {
            let l = Lattice::new(1, n).unwrap();
            let r = l.reduce_coord(c);
            prop_assert!(r >= l.min_coord() && r <= l.max_coord());
            prop_assert_eq!((c - r).rem_euclid(n as i64), 0);
        }

        #[test]
        fn distance_is_symmetric_and_bounded(n in 1usize..30, a in proptest::collection::vec(-60i64..60, 3), b in proptest::collection::vec(-60i64..60, 3)) {
            let l = Lattice::new(3, n).unwrap();
            let dab = l.distance(&a, &b);
            prop_assert_eq!(dab, l.distance(&b, &a));
            prop_assert!(dab <= (n as f64 / 2.0) * 3f64.sqrt() + 1e-12);
            let same = l.reduce(&a) == l.reduce(&b);
            prop_assert_eq!(dab == 0.0, same);
        }
    }
}
