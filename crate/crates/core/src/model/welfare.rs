use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::IncomeGrid;

/// Class weights of the welfare redistribution, decreasing linearly in the class index.
///
/// `γ = 1/2` gives uniform welfare; smaller `γ` favours poorer classes.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareWeights<T> {
    gamma: T,
    weights: Vec<T>,
}

impl<T: Scalar> WelfareWeights<T> {
    /// `w_j = r̃_{n+1-j} + 2/(n-1) γ (j - (n+1)/2) (r̃_n - r̃_1)`. Requires a linear grid.
    pub fn new(grid: &IncomeGrid<T>, gamma: T) -> Result<Self> {
        if !(gamma > T::zero() && gamma <= T::lit(0.5)) {
            return Err(invalid(format!(
                "welfare parameter gamma = {gamma} outside (0, 1/2]"
            )));
        }
        if grid.linear_spacing().is_none() {
            return Err(invalid(
                "welfare weights are defined only on a linear grid r_j = c j",
            ));
        }
        let n = grid.n();
        let nf = T::from_usize_lossy(n);
        let two = T::lit(2.0);
        let span = grid.average(n) - grid.average(1);
        let centre = (nf + T::one()) / two;
        let slope = two / (nf - T::one()) * gamma * span;
        let weights = (1..=n)
            .map(|j| grid.average(n + 1 - j) + slope * (T::from_usize_lossy(j) - centre))
            .collect();
        Ok(Self { gamma, weights })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Weight of class `j`, 1-based.
    #[inline]
    pub fn weight(&self, j: usize) -> T {
        self.weights[j - 1]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `Σ_j w_j X_j` over all classes.
    pub fn mass(&self, x: &[T]) -> T {
        self.weights
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (w, xi)| acc + *w * *xi)
    }
}
