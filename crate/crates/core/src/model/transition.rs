use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{guards, EncounterMatrix, IncomeGrid, TaxSchedule};

/// `C[i][h][k]`: probability that an `h`-individual ends in class `i` after a
/// direct exchange with a `k`-individual. Zero unless `|i - h| <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectTransitionTensor<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DirectTransitionTensor<T> {
    pub fn build(
        grid: &IncomeGrid<T>,
        s: T,
        p: &EncounterMatrix<T>,
        tau: &TaxSchedule<T>,
    ) -> Result<Self> {
        let n = grid.n();
        let two_s = T::lit(2.0) * s;
        let mut c = Self {
            n,
            data: vec![T::zero(); n * n * n],
        };
        for i in 1..=n {
            for k in 1..=n {
                if guards::descent_entry(i, k, n) {
                    let v = p.get(i + 1, k) * two_s * (T::one() - tau.rate(k)) / grid.spread(i + 1);
                    c.set(i, i + 1, k, v);
                }
                let mut stay = T::one();
                if guards::diagonal_gain_term(i, k, n) {
                    stay -= p.get(k, i) * two_s * (T::one() - tau.rate(i)) / grid.spread(i + 1);
                }
                if guards::diagonal_payment_term(i, k, n) {
                    stay -= p.get(i, k) * two_s * (T::one() - tau.rate(k)) / grid.spread(i);
                }
                c.set(i, i, k, stay);
                if guards::ascent_entry(i, k) {
                    let v = p.get(k, i - 1) * two_s * (T::one() - tau.rate(i - 1)) / grid.spread(i);
                    c.set(i, i - 1, k, v);
                }
            }
        }
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        let n = self.n;
        let tol = T::structural_tol();
        for h in 1..=n {
            for k in 1..=n {
                let mut sum = T::zero();
                for i in 1..=n {
                    let v = self.get(i, h, k);
                    if !(v >= T::zero() && v <= T::one()) {
                        return Err(Error::InternalConsistency(format!(
                            "C[{i}][{h}][{k}] = {v} outside [0, 1]; exchange amount too large for the grid"
                        )));
                    }
                    sum += v;
                }
                if (sum - T::one()).abs() > tol {
                    return Err(Error::InternalConsistency(format!(
                        "sum_i C[i][{h}][{k}] = {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn offset(&self, i: usize, h: usize, k: usize) -> usize {
        ((i - 1) * self.n + (h - 1)) * self.n + (k - 1)
    }

    #[inline]
    fn set(&mut self, i: usize, h: usize, k: usize, v: T) {
        let o = self.offset(i, h, k);
        self.data[o] = v;
    }

    /// `C[i][h][k]`, 1-based.
    #[inline]
    pub fn get(&self, i: usize, h: usize, k: usize) -> T {
        self.data[self.offset(i, h, k)]
    }

    /// Row `C[i][h][·]` as a slice over `k`.
    #[inline]
    pub fn row(&self, i: usize, h: usize) -> &[T] {
        let o = self.offset(i, h, 1);
        &self.data[o..o + self.n]
    }

    pub fn n(&self) -> usize {
        self.n
    }
}
