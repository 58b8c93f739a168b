use crate::scalar::Scalar;

use super::IncomeGrid;

/// `p[h][k]`: rate of `(h, k)` encounters in which the `h`-individual pays.
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> EncounterMatrix<T> {
    /// The model-family choice: poorer individuals earn and pay smaller amounts, less often.
    ///
    /// Rule precedence: row 1 and column n are zero; then the boundary rules for
    /// row n and column 1; then the diagonal; then `min(r̃_h, r̃_k) / (4 r̃_n)`.
    pub fn from_grid(grid: &IncomeGrid<T>) -> Self {
        let n = grid.n();
        let top = grid.average(n);
        let quarter = T::lit(4.0) * top;
        let half = T::lit(2.0) * top;
        let mut data = vec![T::zero(); n * n];
        for h in 1..=n {
            for k in 1..=n {
                let value = if h == 1 || k == n {
                    T::zero()
                } else if h == n {
                    grid.average(k) / half
                } else if k == 1 {
                    grid.average(1) / half
                } else if h == k {
                    grid.average(h) / half
                } else {
                    grid.average(h).min(grid.average(k)) / quarter
                };
                data[(h - 1) * n + (k - 1)] = value;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `p[h][k]`, 1-based.
    #[inline]
    pub fn get(&self, h: usize, k: usize) -> T {
        self.data[(h - 1) * self.n + (k - 1)]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}
