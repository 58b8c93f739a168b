use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Partition of the income axis into `n` classes `[r_{i-1}, r_i)`.
///
/// Boundaries are stored as `r_0 = 0 < r_1 < ... < r_n`; class averages
/// `r̃_i = (r_{i-1} + r_i) / 2` are indexed by 1-based class number.
#[derive(Debug, Clone, PartialEq)]
pub struct IncomeGrid<T> {
    bounds: Vec<T>,
    averages: Vec<T>,
    spacing: Option<T>,
}

impl<T: Scalar> IncomeGrid<T> {
    /// Uniform grid `r_j = c * j`, `j = 0..=n`.
    pub fn linear(n: usize, c: T) -> Result<Self> {
        if n < 3 {
            return Err(invalid(format!("class count n = {n} must be at least 3")));
        }
        if !(c > T::zero()) || !c.is_finite() {
            return Err(invalid(format!("class width c = {c} must be positive")));
        }
        let bounds = (0..=n).map(|j| c * T::from_usize_lossy(j)).collect();
        let mut grid = Self::assemble(bounds);
        grid.spacing = Some(c);
        Ok(grid)
    }

    /// Arbitrary strictly increasing boundaries starting at zero.
    pub fn from_boundaries(bounds: Vec<T>) -> Result<Self> {
        if bounds.len() < 4 {
            return Err(invalid("need at least 3 classes (4 boundaries)"));
        }
        if bounds[0] != T::zero() {
            return Err(invalid("first boundary r_0 must be 0"));
        }
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(invalid("boundaries must be finite"));
        }
        if bounds.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("boundaries must be strictly increasing"));
        }
        let mut grid = Self::assemble(bounds);
        let first = grid.bounds[1];
        let tol = T::lit(1e-12) * grid.bounds[grid.n()];
        if grid.bounds.windows(2).all(|w| ((w[1] - w[0]) - first).abs() <= tol) {
            grid.spacing = Some(first);
        }
        Ok(grid)
    }

    fn assemble(bounds: Vec<T>) -> Self {
        let half = T::lit(0.5);
        let averages = bounds.windows(2).map(|w| (w[0] + w[1]) * half).collect();
        Self {
            bounds,
            averages,
            spacing: None,
        }
    }

    pub fn n(&self) -> usize {
        self.averages.len()
    }

    /// Boundary `r_j`, `j = 0..=n`.
    #[inline]
    pub fn bound(&self, j: usize) -> T {
        self.bounds[j]
    }

    /// Class average `r̃_i`, 1-based.
    #[inline]
    pub fn average(&self, i: usize) -> T {
        self.averages[i - 1]
    }

    pub fn bounds(&self) -> &[T] {
        &self.bounds
    }

    pub fn averages(&self) -> &[T] {
        &self.averages
    }

    /// Common class width when the grid is linear in `j`.
    pub fn linear_spacing(&self) -> Option<T> {
        self.spacing
    }

    /// Two-class spread `r_i - r_{i-2}`, defined for `2 <= i <= n`.
    #[inline]
    pub fn spread(&self, i: usize) -> T {
        debug_assert!(i >= 2 && i <= self.n());
        self.bounds[i] - self.bounds[i - 2]
    }

    /// Width `r_{i+1} - r_i` of the step separating class `i` from class `i + 1`.
    #[inline]
    pub fn step_above(&self, i: usize) -> T {
        self.bounds[i + 1] - self.bounds[i]
    }

    pub fn min_average_gap(&self) -> T {
        self.averages
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(T::infinity(), T::min)
    }

    /// Mean income `μ(X) = Σ r̃_i X_i`.
    pub fn mean_income(&self, x: &[T]) -> T {
        self.averages
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (r, xi)| acc + *r * *xi)
    }
}
