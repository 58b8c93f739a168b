//! Exploration of the `(Δτ, γ)` plane: μ calibration, grid sweeps, level lines of the
//! Gini index, and inequality–mobility correlation statistics.

use std::io::Write;

use rayon::prelude::*;

use crate::dynamics::{solve_equilibrium, IntegrationSettings};
use crate::error::{invalid, Error, Result};
use crate::indicators::{gini, mobility_collective, tax_revenue};
use crate::model::{ModelConfig, ModelParams};
use crate::scalar::Scalar;

/// Centre of the rate pairs used by the `Δτ`-indexed interface.
pub const MIDPOINT_RATE: f64 = 0.375;

/// `(τ_min, τ_max) = (0.375 - Δτ/2, 0.375 + Δτ/2)`: 30–45 % at `Δτ = 0.15`,
/// 25–50 % at `0.25`, 20–55 % at `0.35`, 27.5–47.5 % at `0.20`.
pub fn midpoint_rates<T: Scalar>(delta_tau: T) -> (T, T) {
    let centre = T::lit(MIDPOINT_RATE);
    let half = delta_tau * T::lit(0.5);
    (centre - half, centre + half)
}

/// Model constants shared by all points of an exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct Explorer<T> {
    pub base: ModelConfig,
    pub settings: IntegrationSettings<T>,
}

/// Equilibrium indicators at one point of the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell<T> {
    pub tau_min: T,
    pub tau_max: T,
    pub delta_tau: T,
    pub gamma: T,
    pub mu: T,
    pub gini: T,
    pub mobility: T,
    pub tax_revenue: T,
    pub residual: T,
    pub x_eq: Vec<T>,
    pub converged: bool,
    /// Failure description for cells that did not converge.
    pub failure: Option<String>,
}

/// Gini index and mobility of the equilibrium at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointIndicators<T> {
    pub gini: T,
    pub mobility: T,
    pub tax_revenue: T,
    pub residual: T,
}

impl<T: Scalar> Explorer<T> {
    pub fn new(base: ModelConfig, settings: IntegrationSettings<T>) -> Self {
        Self { base, settings }
    }

    pub fn params(&self, tau_min: T, tau_max: T, gamma: T) -> Result<ModelParams<T>> {
        self.base
            .clone()
            .with_rates(tau_min.as_f64(), tau_max.as_f64())
            .with_gamma(gamma.as_f64())
            .build()
    }

    /// Solves the equilibrium at `mu` and evaluates `G`, `M` and `TR` on it.
    pub fn evaluate(
        &self,
        tau_min: T,
        tau_max: T,
        gamma: T,
        mu: T,
    ) -> Result<(PointIndicators<T>, Vec<T>)> {
        let params = self.params(tau_min, tau_max, gamma)?;
        let eq = solve_equilibrium(&params, mu, &self.settings)?;
        let point = PointIndicators {
            gini: gini(params.grid(), &eq.x_eq)?,
            mobility: mobility_collective(&params, &eq.x_eq)?.mobility(),
            tax_revenue: tax_revenue(&params, &eq.x_eq)?,
            residual: eq.residual,
        };
        Ok((point, eq.x_eq))
    }

    pub fn gini_at(&self, tau_min: T, tau_max: T, gamma: T, mu: T) -> Result<T> {
        Ok(self.evaluate(tau_min, tau_max, gamma, mu)?.0.gini)
    }

    /// One cell with explicit rates. Solver failures are recorded on the cell.
    pub fn run_cell_rates(&self, tau_min: T, tau_max: T, gamma: T, mu: T) -> SweepCell<T> {
        let nan = T::nan();
        let mut cell = SweepCell {
            tau_min,
            tau_max,
            delta_tau: tau_max - tau_min,
            gamma,
            mu,
            gini: nan,
            mobility: nan,
            tax_revenue: nan,
            residual: nan,
            x_eq: Vec::new(),
            converged: false,
            failure: None,
        };
        match self.evaluate(tau_min, tau_max, gamma, mu) {
            Ok((point, x_eq)) => {
                cell.gini = point.gini;
                cell.mobility = point.mobility;
                cell.tax_revenue = point.tax_revenue;
                cell.residual = point.residual;
                cell.x_eq = x_eq;
                cell.converged = true;
            }
            Err(e) => cell.failure = Some(e.to_string()),
        }
        cell
    }

    /// One cell at `Δτ` under the midpoint rate convention.
    pub fn run_cell(&self, delta_tau: T, gamma: T, mu: T) -> SweepCell<T> {
        let (lo, hi) = midpoint_rates(delta_tau);
        let mut cell = self.run_cell_rates(lo, hi, gamma, mu);
        cell.delta_tau = delta_tau;
        cell
    }

    /// All `(Δτ, γ)` combinations, row-major in `Δτ`, evaluated in parallel.
    pub fn sweep_grid(&self, delta_taus: &[T], gammas: &[T], mu: T) -> Result<Vec<SweepCell<T>>> {
        if delta_taus.is_empty() || gammas.is_empty() {
            return Err(invalid("sweep needs at least one delta_tau and one gamma"));
        }
        let points: Vec<(T, T)> = delta_taus
            .iter()
            .flat_map(|&d| gammas.iter().map(move |&g| (d, g)))
            .collect();
        Ok(points
            .par_iter()
            .map(|&(d, g)| self.run_cell(d, g, mu))
            .collect())
    }

    /// As [`Self::sweep_grid`] with explicit `(τ_min, τ_max)` pairs.
    pub fn sweep_rate_pairs(&self, pairs: &[(T, T)], gammas: &[T], mu: T) -> Result<Vec<SweepCell<T>>> {
        if pairs.is_empty() || gammas.is_empty() {
            return Err(invalid("sweep needs at least one rate pair and one gamma"));
        }
        let points: Vec<((T, T), T)> = pairs
            .iter()
            .flat_map(|&pr| gammas.iter().map(move |&g| (pr, g)))
            .collect();
        Ok(points
            .par_iter()
            .map(|&((lo, hi), g)| self.run_cell_rates(lo, hi, g, mu))
            .collect())
    }

    /// Bisection on μ so that the reference regime reaches `target_gini`.
    pub fn calibrate_mu(
        &self,
        reference: &CalibrationTarget<T>,
        interval: (T, T),
        options: &CalibrationOptions<T>,
    ) -> Result<Calibration<T>> {
        let (mut lo, mut hi) = interval;
        if !(lo < hi) {
            return Err(invalid(format!("empty calibration interval [{lo}, {hi}]")));
        }
        let offset = |mu: T| -> Result<T> {
            Ok(self.gini_at(reference.tau_min, reference.tau_max, reference.gamma, mu)?
                - reference.target_gini)
        };
        let f_lo = offset(lo)?;
        let f_hi = offset(hi)?;
        if f_lo * f_hi > T::zero() {
            return Err(Error::CalibrationFailure {
                target: reference.target_gini.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
                g_lo: (f_lo + reference.target_gini).as_f64(),
                g_hi: (f_hi + reference.target_gini).as_f64(),
            });
        }
        let rising = f_hi > f_lo;
        let mut evaluations = 2;
        while hi - lo > options.mu_tol && evaluations < options.max_evaluations {
            let mid = (lo + hi) * T::lit(0.5);
            let f = offset(mid)?;
            evaluations += 1;
            if (f < T::zero()) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = (lo + hi) * T::lit(0.5);
        let achieved = offset(mu)? + reference.target_gini;
        evaluations += 1;
        if (achieved - reference.target_gini).abs() > options.gini_tol {
            return Err(Error::CalibrationFailure {
                target: reference.target_gini.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
                g_lo: achieved.as_f64(),
                g_hi: achieved.as_f64(),
            });
        }
        Ok(Calibration {
            mu,
            gini: achieved,
            evaluations,
        })
    }

    /// For each `Δτ`, bisection on `γ` within `gamma_bounds` until `G` hits `target_gini`.
    pub fn trace_level_line(
        &self,
        target_gini: T,
        delta_taus: &[T],
        gamma_bounds: (T, T),
        mu: T,
        options: &LevelLineOptions<T>,
    ) -> LevelLine<T> {
        let mut sorted = delta_taus.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite delta_tau"));
        sorted.dedup();
        let results: Vec<std::result::Result<LevelPoint<T>, SkippedPoint<T>>> = sorted
            .par_iter()
            .map(|&d| {
                self.level_point(target_gini, d, gamma_bounds, mu, options)
                    .map_err(|e| SkippedPoint {
                        delta_tau: d,
                        reason: e.to_string(),
                    })
            })
            .collect();
        let mut line = LevelLine {
            target_gini,
            tolerance: options.gini_tol,
            mu,
            points: Vec::new(),
            skipped: Vec::new(),
        };
        for r in results {
            match r {
                Ok(p) => line.points.push(p),
                Err(s) => line.skipped.push(s),
            }
        }
        line
    }

    fn level_point(
        &self,
        target: T,
        delta_tau: T,
        (gamma_lo, gamma_hi): (T, T),
        mu: T,
        options: &LevelLineOptions<T>,
    ) -> Result<LevelPoint<T>> {
        let (tau_min, tau_max) = midpoint_rates(delta_tau);
        let offset = |g: T| -> Result<T> { Ok(self.gini_at(tau_min, tau_max, g, mu)? - target) };
        let (mut lo, mut hi) = (gamma_lo, gamma_hi);
        let f_lo = offset(lo)?;
        let f_hi = offset(hi)?;
        if f_lo * f_hi > T::zero() {
            return Err(Error::CalibrationFailure {
                target: target.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
                g_lo: (f_lo + target).as_f64(),
                g_hi: (f_hi + target).as_f64(),
            });
        }
        let rising = f_hi > f_lo;
        let mut iterations = 0;
        while hi - lo > options.gamma_tol && iterations < options.max_iterations {
            let mid = (lo + hi) * T::lit(0.5);
            if (offset(mid)? < T::zero()) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let gamma = (lo + hi) * T::lit(0.5);
        let (point, _) = self.evaluate(tau_min, tau_max, gamma, mu)?;
        if (point.gini - target).abs() > options.gini_tol {
            return Err(invalid(format!(
                "bisection ended at G = {} (target {target}, tolerance {})",
                point.gini, options.gini_tol
            )));
        }
        Ok(LevelPoint {
            delta_tau,
            tau_min,
            tau_max,
            gamma,
            gini: point.gini,
            mobility: point.mobility,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTarget<T> {
    pub tau_min: T,
    pub tau_max: T,
    pub gamma: T,
    pub target_gini: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions<T> {
    /// Bisection stops once the μ bracket is narrower than this.
    pub mu_tol: T,
    /// Required `|G - target|` at the returned μ.
    pub gini_tol: T,
    pub max_evaluations: usize,
}

impl<T: Scalar> Default for CalibrationOptions<T> {
    fn default() -> Self {
        Self {
            mu_tol: T::lit(1e-7),
            gini_tol: T::lit(1e-4),
            max_evaluations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration<T> {
    pub mu: T,
    pub gini: T,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelLineOptions<T> {
    pub gini_tol: T,
    pub gamma_tol: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for LevelLineOptions<T> {
    fn default() -> Self {
        Self {
            gini_tol: T::lit(5e-4),
            gamma_tol: T::lit(1e-6),
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelPoint<T> {
    pub delta_tau: T,
    pub tau_min: T,
    pub tau_max: T,
    pub gamma: T,
    pub gini: T,
    pub mobility: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedPoint<T> {
    pub delta_tau: T,
    pub reason: String,
}

/// Points of constant Gini index in the `(Δτ, γ)` plane, increasing in `Δτ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLine<T> {
    pub target_gini: T,
    pub tolerance: T,
    pub mu: T,
    pub points: Vec<LevelPoint<T>>,
    pub skipped: Vec<SkippedPoint<T>>,
}

impl<T: Scalar> LevelLine<T> {
    /// `(max M - min M) / mean M` along the line.
    pub fn mobility_spread(&self) -> Option<T> {
        if self.points.is_empty() {
            return None;
        }
        let ms = self.points.iter().map(|p| p.mobility);
        let max = ms.clone().fold(T::neg_infinity(), T::max);
        let min = ms.clone().fold(T::infinity(), T::min);
        let mean = ms.fold(T::zero(), |a, b| a + b) / T::from_usize_lossy(self.points.len());
        Some((max - min) / mean)
    }
}

/// Pearson correlation of `(G, M)` and signs of adjacent increments.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport<T> {
    /// `None` when either coordinate is constant over the cells.
    pub pearson: Option<T>,
    pub degenerate: bool,
    /// `ΔG · ΔM` between neighbours in γ at fixed Δτ, one vector per Δτ.
    pub row_products: Vec<Vec<T>>,
    /// `ΔG · ΔM` between neighbours in Δτ at fixed γ, one vector per γ.
    pub column_products: Vec<Vec<T>>,
}

impl<T: Scalar> CorrelationReport<T> {
    /// True when every adjacent increment pair has opposite (or zero) sign.
    pub fn increments_opposite(&self) -> bool {
        self.row_products
            .iter()
            .chain(&self.column_products)
            .flatten()
            .all(|&p| p <= T::zero())
    }
}

pub fn pearson<T: Scalar>(pairs: &[(T, T)]) -> Option<T> {
    let m = T::from_usize_lossy(pairs.len());
    let (sx, sy) = pairs
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut syy, mut sxy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > T::zero() && syy > T::zero()) {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub fn correlation_report<T: Scalar>(cells: &[SweepCell<T>]) -> Result<CorrelationReport<T>> {
    let ok: Vec<&SweepCell<T>> = cells.iter().filter(|c| c.converged).collect();
    if ok.len() < 3 {
        return Err(invalid(format!(
            "correlation needs at least 3 converged cells, got {}",
            ok.len()
        )));
    }
    let pairs: Vec<(T, T)> = ok.iter().map(|c| (c.gini, c.mobility)).collect();
    let pearson = pearson(&pairs);

    let products = |key: fn(&SweepCell<T>) -> T, along: fn(&SweepCell<T>) -> T| -> Vec<Vec<T>> {
        let mut keys: Vec<T> = ok.iter().map(|c| key(c)).collect();
        keys.sort_by(|a, b| a.partial_cmp(b).expect("finite key"));
        keys.dedup();
        keys.iter()
            .map(|&k| {
                let mut line: Vec<&&SweepCell<T>> = ok.iter().filter(|c| key(c) == k).collect();
                line.sort_by(|a, b| along(a).partial_cmp(&along(b)).expect("finite coordinate"));
                line.windows(2)
                    .map(|w| (w[1].gini - w[0].gini) * (w[1].mobility - w[0].mobility))
                    .collect()
            })
            .collect()
    };
    Ok(CorrelationReport {
        degenerate: pearson.is_none(),
        pearson,
        row_products: products(|c| c.delta_tau, |c| c.gamma),
        column_products: products(|c| c.gamma, |c| c.delta_tau),
    })
}

/// `tau_min, tau_max, delta_tau, gamma, mu, G, M, TR, converged`.
pub fn write_cells_csv<T: Scalar, W: Write>(cells: &[SweepCell<T>], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau_min", "tau_max", "delta_tau", "gamma", "mu", "G", "M", "TR", "converged"])?;
    for c in cells {
        w.write_record([
            c.tau_min.to_string(),
            c.tau_max.to_string(),
            c.delta_tau.to_string(),
            c.gamma.to_string(),
            c.mu.to_string(),
            c.gini.to_string(),
            c.mobility.to_string(),
            c.tax_revenue.to_string(),
            c.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn percent<T: Scalar>(rate: T) -> String {
    let p = (rate.as_f64() * 1000.0).round() / 10.0;
    format!("{p}")
}

/// `tau_min-tau_max, delta_tau, gamma, G, M`, rates in percent.
pub fn write_level_line_csv<T: Scalar, W: Write>(line: &LevelLine<T>, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tau_min-tau_max", "delta_tau", "gamma", "G", "M"])?;
    for p in &line.points {
        w.write_record([
            format!("{} - {}", percent(p.tau_min), percent(p.tau_max)),
            p.delta_tau.to_string(),
            p.gamma.to_string(),
            p.gini.to_string(),
            p.mobility.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table with rounded values, one line per level-line point.
pub fn format_level_line_table<T: Scalar>(label: &str, line: &LevelLine<T>) -> String {
    let mut s = format!(
        "Level line {label}: G = {:.3}, mu = {}\n{:<14}{:>8}{:>8}{:>8}{:>11}\n",
        line.target_gini.as_f64(),
        line.mu,
        "tau_min-max",
        "dtau",
        "gamma",
        "G",
        "M"
    );
    for p in &line.points {
        s.push_str(&format!(
            "{:<14}{:>8.2}{:>8.2}{:>8.3}{:>11.6}\n",
            format!("{} - {}", percent(p.tau_min), percent(p.tau_max)),
            p.delta_tau.as_f64(),
            p.gamma.as_f64(),
            p.gini.as_f64(),
            p.mobility.as_f64()
        ));
    }
    for sk in &line.skipped {
        s.push_str(&format!("skipped dtau = {}: {}\n", sk.delta_tau, sk.reason));
    }
    s
}
