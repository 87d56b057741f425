use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Matrix-free access to a Hermitian matrix.
pub trait HermitianOperator: Sync {
    fn dim(&self) -> usize;

    /// `out = H v`.
    fn apply(&self, v: &[Complex64], out: &mut [Complex64]);

    /// `sup_x ∑_y |H_xy|`.
    fn max_abs_row_sum(&self) -> f64;

    /// `sup_y ∑_x |H_xy|`.
    fn max_abs_col_sum(&self) -> f64;

    /// True when every entry has zero imaginary part.
    fn is_real(&self) -> bool;

    fn to_dense(&self) -> DMatrix<Complex64>;

    /// Schur bound `(max row sum · max column sum)^{1/2}` on `‖H‖`.
    fn schur_bound(&self) -> f64 {
        (self.max_abs_row_sum() * self.max_abs_col_sum()).sqrt()
    }
}

/// Dense Hermitian matrix, for small toys and oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian {
    m: DMatrix<Complex64>,
}

impl DenseHermitian {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("H", "matrix must be square"));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        for i in 0..m.nrows() {
            for j in 0..=i {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::invalid("H", format!("not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(DenseHermitian { m })
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0));
        DenseHermitian::new(m)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }
}

impl HermitianOperator for DenseHermitian {
    fn dim(&self) -> usize {
        self.m.nrows()
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = (0..n).map(|j| self.m[(i, j)] * v[j]).sum();
        }
    }

    fn max_abs_row_sum(&self) -> f64 {
        self.m
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn max_abs_col_sum(&self) -> f64 {
        self.m
            .column_iter()
            .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == 0.0)
    }

    fn to_dense(&self) -> DMatrix<Complex64> {
        self.m.clone()
    }
}

/// Schur bound for an arbitrary (not necessarily Hermitian) dense matrix.
pub fn schur_norm_bound(m: &DMatrix<Complex64>) -> f64 {
    let row = m
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let col = m
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    (row * col).sqrt()
}
