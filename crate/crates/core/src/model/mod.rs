//! Model family: income grid, encounter rates, tax schedule, welfare weights, the
//! direct transition tensor, the indirect tax/welfare variations, and the right-hand
//! side of the evolution equations.
//!
//! Class indices in this module are 1-based (`1..=n`), as in the model's formulas;
//! raw slices (`&[T]` population vectors) are 0-based.

mod encounter;
mod grid;
pub mod guards;
mod tax;
mod transition;
mod welfare;

pub use encounter::EncounterMatrix;
pub use grid::IncomeGrid;
pub use tax::TaxSchedule;
pub use transition::DirectTransitionTensor;
pub use welfare::WelfareWeights;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Numeric model parameters as they appear in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "ModelConfig::default_n")]
    pub n: usize,
    #[serde(default = "ModelConfig::default_c")]
    pub c: f64,
    #[serde(rename = "S", alias = "s", default = "ModelConfig::default_s")]
    pub s: f64,
    #[serde(default = "ModelConfig::default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "ModelConfig::default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "ModelConfig::default_gamma")]
    pub gamma: f64,
}

impl ModelConfig {
    fn default_n() -> usize {
        15
    }
    fn default_c() -> f64 {
        25.0
    }
    fn default_s() -> f64 {
        1.0
    }
    fn default_tau_min() -> f64 {
        0.30
    }
    fn default_tau_max() -> f64 {
        0.45
    }
    fn default_gamma() -> f64 {
        0.5
    }

    pub fn with_rates(mut self, tau_min: f64, tau_max: f64) -> Self {
        self.tau_min = tau_min;
        self.tau_max = tau_max;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| invalid(format!("model config: {e}")))
    }

    pub fn build<T: Scalar>(&self) -> Result<ModelParams<T>> {
        ModelParams::from_config(self)
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n: Self::default_n(),
            c: Self::default_c(),
            s: Self::default_s(),
            tau_min: Self::default_tau_min(),
            tau_max: Self::default_tau_max(),
            gamma: Self::default_gamma(),
        }
    }
}

/// A fully constructed member of the model family. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    grid: IncomeGrid<T>,
    s: T,
    encounter: EncounterMatrix<T>,
    tax: TaxSchedule<T>,
    welfare: WelfareWeights<T>,
    tensor: DirectTransitionTensor<T>,
    /// `p[h][k] · 2S · τ_k`, row-major.
    taxed: Vec<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(grid: IncomeGrid<T>, s: T, tax: TaxSchedule<T>, gamma: T) -> Result<Self> {
        let n = grid.n();
        if tax.rates().len() != n {
            return Err(invalid(format!(
                "tax schedule has {} classes, grid has {n}",
                tax.rates().len()
            )));
        }
        if !(s > T::zero()) {
            return Err(invalid(format!("exchange amount S = {s} must be positive")));
        }
        let gap = grid.min_average_gap();
        if !(s < gap) {
            return Err(invalid(format!(
                "exchange amount S = {s} must be below the smallest class-average gap {gap}"
            )));
        }
        let welfare = WelfareWeights::new(&grid, gamma)?;
        let encounter = EncounterMatrix::from_grid(&grid);
        let tensor = DirectTransitionTensor::build(&grid, s, &encounter, &tax)?;
        let two_s = T::lit(2.0) * s;
        let mut taxed = vec![T::zero(); n * n];
        for h in 1..=n {
            for k in 1..=n {
                taxed[(h - 1) * n + (k - 1)] = encounter.get(h, k) * two_s * tax.rate(k);
            }
        }
        Ok(Self {
            grid,
            s,
            encounter,
            tax,
            welfare,
            tensor,
            taxed,
        })
    }

    pub fn from_config(cfg: &ModelConfig) -> Result<Self> {
        let grid = IncomeGrid::linear(cfg.n, T::lit(cfg.c))?;
        let tax = TaxSchedule::linear(cfg.n, T::lit(cfg.tau_min), T::lit(cfg.tau_max))?;
        Self::new(grid, T::lit(cfg.s), tax, T::lit(cfg.gamma))
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }
    pub fn grid(&self) -> &IncomeGrid<T> {
        &self.grid
    }
    pub fn exchange_amount(&self) -> T {
        self.s
    }
    pub fn encounter(&self) -> &EncounterMatrix<T> {
        &self.encounter
    }
    pub fn tax(&self) -> &TaxSchedule<T> {
        &self.tax
    }
    pub fn welfare(&self) -> &WelfareWeights<T> {
        &self.welfare
    }
    pub fn tensor(&self) -> &DirectTransitionTensor<T> {
        &self.tensor
    }

    /// Configuration that rebuilds these parameters (linear grids only).
    pub fn to_config(&self) -> Option<ModelConfig> {
        Some(ModelConfig {
            n: self.n(),
            c: self.grid.linear_spacing()?.as_f64(),
            s: self.s.as_f64(),
            tau_min: self.tax.min().as_f64(),
            tau_max: self.tax.max().as_f64(),
            gamma: self.welfare.gamma().as_f64(),
        })
    }

    #[inline]
    fn taxed(&self, h: usize, k: usize) -> T {
        self.taxed[(h - 1) * self.n() + (k - 1)]
    }

    /// `Σ_j w_j X_j`, rejecting a vanishing mass.
    pub fn welfare_mass(&self, x: &[T]) -> Result<T> {
        let mass = self.welfare.mass(x);
        if !(mass > T::zero()) {
            return Err(Error::DegenerateState(format!(
                "welfare-weighted population mass is {mass}"
            )));
        }
        Ok(mass)
    }

    /// `Σ_{h,k} p[h][k] τ_k X_h X_k`: taxed exchange rate per unit exchanged amount.
    pub fn taxed_exchange_rate(&self, x: &[T]) -> T {
        let n = self.n();
        let mut total = T::zero();
        for h in 1..=n {
            let mut inner = T::zero();
            for k in 1..=n {
                inner += self.encounter.get(h, k) * self.tax.rate(k) * x[k - 1];
            }
            total += inner * x[h - 1];
        }
        total
    }

    /// Indirect variation `T^i_[hk](X) = U^i_[hk](X) + V^i_[hk](X)` of class `i`
    /// caused by tax redistribution (advancement, `U`) and tax payment
    /// (retrocession, `V`) in an exchange where an `h`-individual pays a `k`-individual.
    pub fn indirect_variation(&self, x: &[T], h: usize, k: usize, i: usize) -> Result<T> {
        let n = self.n();
        self.check_len(x)?;
        for (name, idx) in [("h", h), ("k", k), ("i", i)] {
            if idx < 1 || idx > n {
                return Err(invalid(format!("{name} = {idx} outside 1..={n}")));
            }
        }
        let mass = self.welfare_mass(x)?;
        if h == 1 {
            return Ok(T::zero());
        }
        let g = &self.grid;
        let w = &self.welfare;
        let factor = self.taxed(h, k);

        let mut advance = T::zero();
        if guards::welfare_inflow(i) {
            advance += w.weight(i - 1) * x[i - 2] / g.spread(i);
        }
        if guards::welfare_outflow(i, n) {
            advance -= w.weight(i) * x[i - 1] / g.spread(i + 1);
        }
        let u = factor / mass * advance;

        let below_top = mass - w.weight(n) * x[n - 1];
        let mut retreat = T::zero();
        if guards::tax_inflow(i, n) && h == i + 1 {
            retreat += T::one() / (g.bound(h) - g.bound(i - 1));
        }
        if guards::tax_outflow(i) && h == i {
            retreat -= T::one() / (g.bound(h) - g.bound(i - 2));
        }
        let v = factor * below_top / mass * retreat;
        Ok(u + v)
    }

    /// `dX/dt` with validation that `x` lies on the probability simplex.
    pub fn rhs(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_simplex(x)?;
        let mut out = vec![T::zero(); self.n()];
        self.rhs_into(x, &mut out)?;
        Ok(out)
    }

    /// `dX/dt` written into `out`, without the simplex check.
    ///
    /// Uses the tridiagonal structure of `C` in `h` and the factorisation of `U`, `V`
    /// into a scalar taxed flow times per-class shape terms.
    pub fn rhs_into(&self, x: &[T], out: &mut [T]) -> Result<()> {
        let n = self.n();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(out.len(), n);
        let mass = self.welfare_mass(x)?;
        let below_top = mass - self.welfare.weight(n) * x[n - 1];
        let total: T = x.iter().copied().fold(T::zero(), |a, b| a + b);

        // per-payer taxed outflow a_h = X_h Σ_k p[h][k] 2S τ_k X_k
        let mut paid_by = [T::zero(); 64];
        let mut paid_heap;
        let paid: &mut [T] = if n <= paid_by.len() {
            &mut paid_by[..n]
        } else {
            paid_heap = vec![T::zero(); n];
            &mut paid_heap
        };
        let mut taxed_flow = T::zero();
        for h in 1..=n {
            let row = &self.taxed[(h - 1) * n..h * n];
            let inner = row
                .iter()
                .zip(x)
                .fold(T::zero(), |acc, (a, xk)| acc + *a * *xk);
            paid[h - 1] = inner * x[h - 1];
            taxed_flow += paid[h - 1];
        }

        let g = &self.grid;
        let w = &self.welfare;
        let welfare_scale = taxed_flow / mass;
        let payment_scale = below_top / mass;
        for i in 1..=n {
            let mut direct = T::zero();
            for h in i.saturating_sub(1).max(1)..=(i + 1).min(n) {
                let row = self.tensor.row(i, h);
                let inner = row
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (c, xk)| acc + *c * *xk);
                direct += inner * x[h - 1];
            }

            let mut advance = T::zero();
            if guards::welfare_inflow(i) {
                advance += w.weight(i - 1) * x[i - 2] / g.spread(i);
            }
            if guards::welfare_outflow(i, n) {
                advance -= w.weight(i) * x[i - 1] / g.spread(i + 1);
            }

            let mut retreat = T::zero();
            if guards::tax_inflow(i, n) {
                retreat += paid[i] / g.spread(i + 1);
            }
            if guards::tax_outflow(i) {
                retreat -= paid[i - 1] / g.spread(i);
            }

            out[i - 1] =
                direct + welfare_scale * advance + payment_scale * retreat - x[i - 1] * total;
        }
        Ok(())
    }

    /// Residual of the stationarity system `Σ_{h,k}(C + T(X)) X_h X_k - X_i`,
    /// evaluated term by term from the tensor and [`Self::indirect_variation`].
    pub fn stationarity_residual(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x)?;
        let n = self.n();
        let mut out = vec![T::zero(); n];
        for i in 1..=n {
            let mut acc = T::zero();
            for h in 1..=n {
                for k in 1..=n {
                    let coeff = self.tensor.get(i, h, k) + self.indirect_variation(x, h, k, i)?;
                    acc += coeff * x[h - 1] * x[k - 1];
                }
            }
            out[i - 1] = acc - x[i - 1];
        }
        Ok(out)
    }

    pub fn mean_income(&self, x: &[T]) -> T {
        self.grid.mean_income(x)
    }

    pub(crate) fn check_len(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n() {
            return Err(invalid(format!(
                "state has {} components, model has {} classes",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }

    /// Checks `x_i >= 0` and `|Σ x_i - 1| <= tol`.
    pub fn check_simplex(&self, x: &[T]) -> Result<()> {
        self.check_len(x)?;
        check_simplex(x)
    }
}

/// Checks that `x` is a population state: nonnegative with unit total.
pub fn check_simplex<T: Scalar>(x: &[T]) -> Result<()> {
    let tol = T::simplex_tol();
    if let Some((i, v)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= -tol) || !v.is_finite())
    {
        return Err(invalid(format!("X_{} = {v} is negative or not finite", i + 1)));
    }
    let total: T = x.iter().copied().fold(T::zero(), |a, b| a + b);
    if (total - T::one()).abs() > tol {
        return Err(invalid(format!("population fractions sum to {total}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(tau_min: f64, tau_max: f64, gamma: f64) -> ModelParams<f64> {
        ModelConfig::default()
            .with_rates(tau_min, tau_max)
            .with_gamma(gamma)
            .build()
            .unwrap()
    }

    fn sample_state(n: usize, seed: u64) -> Vec<f64> {
        // deterministic pseudo-random simplex point
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut v: Vec<f64> = (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) + 1e-3
            })
            .collect();
        let t: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= t);
        v
    }

    #[test]
    fn rejects_large_exchange_amount() {
        let cfg = ModelConfig {
            s: 25.0,
            ..ModelConfig::default()
        };
        assert!(cfg.build::<f64>().is_err());
        let cfg = ModelConfig {
            s: 24.0,
            ..ModelConfig::default()
        };
        assert!(cfg.build::<f64>().is_ok());
    }

    #[test]
    fn indirect_variations_sum_to_zero() {
        let m = params(0.25, 0.5, 0.2);
        for seed in 0..5 {
            let x = sample_state(15, seed);
            for h in 1..=15 {
                for k in 1..=15 {
                    let s: f64 = (1..=15)
                        .map(|i| m.indirect_variation(&x, h, k, i).unwrap())
                        .sum();
                    assert!(s.abs() < 1e-12, "h={h} k={k} sum={s}");
                }
            }
        }
    }

    #[test]
    fn no_tax_no_indirect_variation() {
        let m = params(0.0, 0.0, 0.3);
        let x = sample_state(15, 3);
        for h in 1..=15 {
            for k in 1..=15 {
                for i in 1..=15 {
                    assert_eq!(m.indirect_variation(&x, h, k, i).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn payer_in_first_class_has_no_indirect_effect() {
        let m = params(0.3, 0.45, 0.5);
        let x = sample_state(15, 9);
        for k in 1..=15 {
            for i in 1..=15 {
                assert_eq!(m.indirect_variation(&x, 1, k, i).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn fast_rhs_matches_term_by_term_sum() {
        let m = params(0.3, 0.6, 0.25);
        for seed in 0..5 {
            let x = sample_state(15, seed);
            let fast = m.rhs(&x).unwrap();
            let slow = m.stationarity_residual(&x).unwrap();
            for i in 0..15 {
                // on the simplex Σ X_k = 1, so both forms coincide
                assert!((fast[i] - slow[i]).abs() < 1e-15, "{i}: {} vs {}", fast[i], slow[i]);
            }
        }
    }

    #[test]
    fn rhs_conserves_population_and_income() {
        let m = params(0.3, 0.45, 0.5);
        for seed in 0..20 {
            let x = sample_state(15, seed);
            let d = m.rhs(&x).unwrap();
            let mass: f64 = d.iter().sum();
            let income: f64 = d.iter().zip(m.grid().averages()).map(|(a, b)| a * b).sum();
            assert!(mass.abs() < 1e-12);
            assert!(income.abs() < 1e-10);
        }
    }

    #[test]
    fn all_mass_in_first_class_is_stationary() {
        let m = params(0.3, 0.45, 0.5);
        let mut x = vec![0.0; 15];
        x[0] = 1.0;
        assert!(m.rhs(&x).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_rejects_off_simplex_state() {
        let m = params(0.3, 0.45, 0.5);
        assert!(m.rhs(&[0.1; 15]).is_err());
        assert!(m.rhs(&[1.0 / 14.0; 14]).is_err());
    }

    #[test]
    fn degenerate_welfare_mass() {
        let m = params(0.3, 0.45, 0.5);
        let err = m.indirect_variation(&[0.0; 15], 2, 3, 4).unwrap_err();
        assert!(matches!(err, Error::DegenerateState(_)));
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let cfg = ModelConfig::from_toml_str(
            "n = 15\nc = 25.0\nS = 1.0\ntau_min = 0.3\ntau_max = 0.6\ngamma = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.tau_max, 0.6);
        let m: ModelParams<f64> = cfg.build().unwrap();
        assert_eq!(m.to_config().unwrap(), cfg);
        assert!(ModelConfig::from_toml_str("n = 15\nbogus = 1\n").is_err());
        assert_eq!(ModelConfig::from_toml_str("").unwrap(), ModelConfig::default());
    }

    #[test]
    fn single_precision_model_builds() {
        let m: ModelParams<f32> = ModelConfig::default().build().unwrap();
        let x = vec![1.0f32 / 15.0; 15];
        let d = m.rhs(&x).unwrap();
        assert!(d.iter().sum::<f32>().abs() < 1e-5);
    }
}
