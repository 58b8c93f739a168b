use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Progressive tax rates `τ_j = τ_min + (j-1)/(n-1) (τ_max - τ_min)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaxSchedule<T> {
    rates: Vec<T>,
    min: T,
    max: T,
}

impl<T: Scalar> TaxSchedule<T> {
    pub fn linear(n: usize, tau_min: T, tau_max: T) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("tax schedule needs n >= 2, got {n}")));
        }
        if !(tau_min >= T::zero() && tau_min <= tau_max && tau_max < T::one()) {
            return Err(invalid(format!(
                "tax rates must satisfy 0 <= tau_min <= tau_max < 1, got [{tau_min}, {tau_max}]"
            )));
        }
        let span = T::from_usize_lossy(n - 1);
        let rates = (0..n)
            .map(|j| {
                if j == n - 1 {
                    tau_max
                } else {
                    tau_min + T::from_usize_lossy(j) / span * (tau_max - tau_min)
                }
            })
            .collect();
        Ok(Self {
            rates,
            min: tau_min,
            max: tau_max,
        })
    }

    /// Rate of class `j`, 1-based.
    #[inline]
    pub fn rate(&self, j: usize) -> T {
        self.rates[j - 1]
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    #[cfg(test)]
    pub(crate) fn from_raw(rates: Vec<T>) -> Self {
        let min = rates[0];
        let max = rates[rates.len() - 1];
        Self { rates, min, max }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation() {
        let t = TaxSchedule::<f64>::linear(15, 0.30, 0.45).unwrap();
        assert_eq!(t.rate(1), 0.30);
        assert_eq!(t.rate(15), 0.45);
        assert!((t.rate(8) - 0.375).abs() < 1e-15);
        assert!((t.rate(2) - (0.30 + 0.15 / 14.0)).abs() < 1e-15);
        assert!(t.rates().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn flat_schedule() {
        let t = TaxSchedule::linear(15, 0.3, 0.3).unwrap();
        assert!(t.rates().iter().all(|&r| r == 0.3));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(TaxSchedule::linear(15, -0.1, 0.3).is_err());
        assert!(TaxSchedule::linear(15, 0.5, 0.3).is_err());
        assert!(TaxSchedule::linear(15, 0.3, 1.0).is_err());
    }
}
