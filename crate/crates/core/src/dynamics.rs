//! Time integration of the evolution equations towards the stationary distribution.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::model::{check_simplex, IncomeGrid, ModelParams};
use crate::scalar::{sup_distance, sup_norm, to_f64_vec, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSettings<T> {
    pub dt: T,
    pub max_time: T,
    /// Stop once the sup-norm of `dX/dt` falls below this.
    pub convergence_tol: T,
    /// Bound on the drift of total population and mean income.
    pub drift_tol: T,
    pub renormalize: bool,
}

impl<T: Scalar> Default for IntegrationSettings<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(0.5),
            max_time: T::lit(5e6),
            convergence_tol: T::lit(1e-12).max(T::epsilon()),
            drift_tol: T::lit(1e-9).max(T::epsilon() * T::lit(1e5)),
            renormalize: true,
        }
    }
}

impl<T: Scalar> IntegrationSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(invalid(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.max_time > T::zero()) {
            return Err(invalid(format!("max_time = {} must be positive", self.max_time)));
        }
        if !(self.convergence_tol > T::zero()) || !(self.drift_tol > T::zero()) {
            return Err(invalid("tolerances must be positive"));
        }
        Ok(())
    }

    pub fn with_dt(mut self, dt: T) -> Self {
        self.dt = dt;
        self
    }
}

/// How to build the starting population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConditionSpec {
    /// `X_i = 1/n`.
    Uniform {},
    /// Geometric profile `X_i ∝ q^{i-1}`; `q` is solved from `target_mu` when given.
    LowMiddle {
        #[serde(default)]
        target_mu: Option<f64>,
        #[serde(default)]
        ratio: Option<f64>,
    },
    /// Mass split between classes `a` and `b` (1-based).
    TwoPoint {
        a: usize,
        b: usize,
        #[serde(default)]
        target_mu: Option<f64>,
    },
    Explicit {
        x: Vec<f64>,
        #[serde(default)]
        target_mu: Option<f64>,
    },
}

impl InitialConditionSpec {
    pub fn low_middle(target_mu: f64) -> Self {
        Self::LowMiddle {
            target_mu: Some(target_mu),
            ratio: None,
        }
    }

    pub fn two_point(a: usize, b: usize, target_mu: f64) -> Self {
        Self::TwoPoint {
            a,
            b,
            target_mu: Some(target_mu),
        }
    }

    pub fn target_mu(&self) -> Option<f64> {
        match self {
            Self::Uniform {} => None,
            Self::LowMiddle { target_mu, .. }
            | Self::TwoPoint { target_mu, .. }
            | Self::Explicit { target_mu, .. } => *target_mu,
        }
    }
}

const LOW_MIDDLE_DEFAULT_RATIO: f64 = 0.8;

pub fn make_initial_condition<T: Scalar>(
    spec: &InitialConditionSpec,
    grid: &IncomeGrid<T>,
) -> Result<Vec<T>> {
    let n = grid.n();
    let lo = grid.average(1);
    let hi = grid.average(n);
    let target = spec.target_mu().map(T::lit);
    if let Some(mu) = target {
        if !(mu >= lo && mu <= hi) {
            return Err(invalid(format!(
                "target mean income {mu} outside the reachable range [{lo}, {hi}]"
            )));
        }
    }
    let x = match spec {
        InitialConditionSpec::Uniform {} => vec![T::one() / T::from_usize_lossy(n); n],
        InitialConditionSpec::LowMiddle { ratio, .. } => match (target, ratio) {
            (Some(_), Some(_)) => {
                return Err(invalid("low-middle takes either target_mu or ratio, not both"))
            }
            (Some(mu), None) => geometric_with_mean(grid, mu),
            (None, r) => {
                let q = T::lit(r.unwrap_or(LOW_MIDDLE_DEFAULT_RATIO));
                if !(q > T::zero()) || !q.is_finite() {
                    return Err(invalid(format!("geometric ratio {q} must be positive")));
                }
                geometric(n, q)
            }
        },
        InitialConditionSpec::TwoPoint { a, b, .. } => {
            let (a, b) = (*a, *b);
            if a < 1 || b > n || a >= b {
                return Err(invalid(format!(
                    "two-point classes need 1 <= a < b <= {n}, got a = {a}, b = {b}"
                )));
            }
            let (ra, rb) = (grid.average(a), grid.average(b));
            let share_a = match target {
                Some(mu) if mu < ra || mu > rb => {
                    return Err(invalid(format!(
                        "target mean income {mu} not between r_avg[{a}] = {ra} and r_avg[{b}] = {rb}"
                    )))
                }
                Some(mu) => (rb - mu) / (rb - ra),
                None => T::lit(0.5),
            };
            let mut x = vec![T::zero(); n];
            x[a - 1] = share_a;
            x[b - 1] = T::one() - share_a;
            x
        }
        InitialConditionSpec::Explicit { x, .. } => {
            if x.len() != n {
                return Err(invalid(format!(
                    "explicit state has {} components, grid has {n} classes",
                    x.len()
                )));
            }
            x.iter().map(|&v| T::lit(v)).collect()
        }
    };
    check_simplex(&x)?;
    if let Some(mu) = target {
        let got = grid.mean_income(&x);
        let tol = T::lit(1e-10).max(T::epsilon() * hi * T::lit(16.0));
        if (got - mu).abs() > tol {
            return Err(invalid(format!(
                "initial state has mean income {got}, target {mu}"
            )));
        }
    }
    Ok(x)
}

fn geometric<T: Scalar>(n: usize, q: T) -> Vec<T> {
    // normalise against the largest term so q far from 1 cannot overflow
    let log_q = q.ln();
    let top = if q > T::one() { T::from_usize_lossy(n - 1) * log_q } else { T::zero() };
    let mut x: Vec<T> = (0..n)
        .map(|i| (T::from_usize_lossy(i) * log_q - top).exp())
        .collect();
    let total = x.iter().copied().fold(T::zero(), |a, b| a + b);
    x.iter_mut().for_each(|v| *v /= total);
    x
}

/// Geometric profile whose mean income is `mu`; the mean is increasing in the ratio.
fn geometric_with_mean<T: Scalar>(grid: &IncomeGrid<T>, mu: T) -> Vec<T> {
    let n = grid.n();
    let mut x = vec![T::zero(); n];
    if mu <= grid.average(1) {
        x[0] = T::one();
        return x;
    }
    if mu >= grid.average(n) {
        x[n - 1] = T::one();
        return x;
    }
    let (mut lo, mut hi) = (T::lit(-80.0), T::lit(80.0));
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if grid.mean_income(&geometric(n, mid.exp())) < mu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let below = geometric(n, lo.exp());
    let above = geometric(n, hi.exp());
    // exact mean by mixing the two bracketing profiles
    let (m_lo, m_hi) = (grid.mean_income(&below), grid.mean_income(&above));
    let theta = if m_hi > m_lo { (mu - m_lo) / (m_hi - m_lo) } else { T::zero() };
    below
        .iter()
        .zip(&above)
        .map(|(a, b)| *a + theta * (*b - *a))
        .collect()
}

/// Converged stationary distribution with diagnostics of the run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState<T> {
    pub x_eq: Vec<T>,
    /// Mean income of the initial state, conserved along the run.
    pub mu: T,
    /// Sup-norm of `dX/dt` at `x_eq`.
    pub residual: T,
    pub elapsed_time: T,
    pub steps: u64,
    /// Exponential decay rate of the residual fitted over its final decade.
    pub rate_estimate: Option<T>,
    /// Coefficient of determination of that log-linear fit.
    pub rate_fit_r2: Option<T>,
    /// Sup-norm change of the state over the last step.
    pub step_change: T,
    /// Largest `|Σ X - 1|` seen before renormalisation.
    pub max_mass_drift: T,
    pub max_mu_drift: T,
}

/// Receives every accepted step of a trajectory.
pub trait TrajectoryObserver<T> {
    fn observe(&mut self, t: T, x: &[T], mu: T, residual: T);
}

impl<T, F: FnMut(T, &[T], T, T)> TrajectoryObserver<T> for F {
    fn observe(&mut self, t: T, x: &[T], mu: T, residual: T) {
        self(t, x, mu, residual)
    }
}

struct NoObserver;

impl<T> TrajectoryObserver<T> for NoObserver {
    fn observe(&mut self, _: T, _: &[T], _: T, _: T) {}
}

/// Streams `t, X_1..X_n, mu, residual` rows every `stride` steps.
pub struct CsvTrajectoryWriter<W: Write> {
    writer: csv::Writer<W>,
    stride: u64,
    seen: u64,
    error: Option<csv::Error>,
}

impl<W: Write> CsvTrajectoryWriter<W> {
    pub fn new(out: W, n: usize, stride: u64) -> Result<Self, csv::Error> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("X_{i}")));
        header.push("mu".into());
        header.push("residual".into());
        writer.write_record(&header)?;
        Ok(Self {
            writer,
            stride: stride.max(1),
            seen: 0,
            error: None,
        })
    }

    pub fn finish(mut self) -> Result<W, csv::Error> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.writer.flush()?;
        self.writer.into_inner().map_err(|e| e.into_error().into())
    }
}

impl<T: Scalar, W: Write> TrajectoryObserver<T> for CsvTrajectoryWriter<W> {
    fn observe(&mut self, t: T, x: &[T], mu: T, residual: T) {
        let due = self.seen.is_multiple_of(self.stride);
        self.seen += 1;
        if !due || self.error.is_some() {
            return;
        }
        let mut row = vec![t.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        row.push(mu.to_string());
        row.push(residual.to_string());
        if let Err(e) = self.writer.write_record(&row) {
            self.error = Some(e);
        }
    }
}

/// Uniformly thinned record of `(t, ln residual)`.
struct ResidualTrace<T> {
    samples: Vec<(T, T)>,
    stride: u64,
    count: u64,
}

impl<T: Scalar> ResidualTrace<T> {
    const CAPACITY: usize = 1 << 14;

    fn new() -> Self {
        Self {
            samples: Vec::new(),
            stride: 1,
            count: 0,
        }
    }

    fn push(&mut self, t: T, residual: T) {
        if self.count.is_multiple_of(self.stride) && residual > T::zero() {
            if self.samples.len() == Self::CAPACITY {
                let kept: Vec<_> = self.samples.iter().copied().step_by(2).collect();
                self.samples = kept;
                self.stride *= 2;
            }
            self.samples.push((t, residual.ln()));
        }
        self.count += 1;
    }

    /// Least-squares line through the samples of the final decade of decay.
    fn final_decade_fit(&self, final_residual: T) -> Option<(T, T)> {
        let floor = final_residual.ln() + T::LN_10();
        let start = self
            .samples
            .iter()
            .rposition(|&(_, lr)| lr >= floor)
            .unwrap_or(0);
        let tail = &self.samples[start..];
        if tail.len() < 3 {
            return None;
        }
        let (slope, r2) = linear_fit(tail)?;
        Some((-slope, r2))
    }
}

/// Returns `(slope, R²)` of the least-squares line through `points`.
pub(crate) fn linear_fit<T: Scalar>(points: &[(T, T)]) -> Option<(T, T)> {
    let m = T::from_usize_lossy(points.len());
    let (sx, sy) = points
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > T::zero()) {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > T::zero() {
        sxy * sxy / (sxx * syy)
    } else {
        T::one()
    };
    Some((slope, r2))
}

/// Classical fourth-order Runge–Kutta with fixed step until `sup|dX/dt| < convergence_tol`.
pub fn integrate<T: Scalar>(
    params: &ModelParams<T>,
    x0: &[T],
    settings: &IntegrationSettings<T>,
) -> Result<EquilibriumState<T>> {
    integrate_observed(params, x0, settings, &mut NoObserver)
}

pub fn integrate_observed<T: Scalar>(
    params: &ModelParams<T>,
    x0: &[T],
    settings: &IntegrationSettings<T>,
    observer: &mut dyn TrajectoryObserver<T>,
) -> Result<EquilibriumState<T>> {
    settings.validate()?;
    params.check_simplex(x0)?;
    let n = params.n();
    let dt = settings.dt;
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let negative_floor = -T::structural_tol();

    let mut x = x0.to_vec();
    let mu0 = params.mean_income(&x);
    let mut k1 = vec![T::zero(); n];
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    let mut stage = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];

    params.rhs_into(&x, &mut k1)?;
    let mut residual = sup_norm(&k1);
    let mut t = T::zero();
    let mut steps = 0u64;
    let mut step_change = T::zero();
    let mut max_mass_drift = T::zero();
    let mut max_mu_drift = T::zero();
    let mut trace = ResidualTrace::new();
    trace.push(t, residual);
    observer.observe(t, &x, mu0, residual);

    while !(residual < settings.convergence_tol) {
        if t >= settings.max_time {
            return Err(Error::NonConvergence {
                time: t.as_f64(),
                residual: residual.as_f64(),
                tolerance: settings.convergence_tol.as_f64(),
                last_state: to_f64_vec(&x),
            });
        }
        for j in 0..n {
            stage[j] = x[j] + half * dt * k1[j];
        }
        params.rhs_into(&stage, &mut k2)?;
        for j in 0..n {
            stage[j] = x[j] + half * dt * k2[j];
        }
        params.rhs_into(&stage, &mut k3)?;
        for j in 0..n {
            stage[j] = x[j] + dt * k3[j];
        }
        params.rhs_into(&stage, &mut k4)?;
        for j in 0..n {
            next[j] = x[j] + dt * sixth * (k1[j] + T::lit(2.0) * (k2[j] + k3[j]) + k4[j]);
        }
        t += dt;
        steps += 1;

        if let Some((j, v)) = next.iter().enumerate().find(|(_, v)| !(**v >= negative_floor)) {
            return Err(Error::Stability {
                time: t.as_f64(),
                class: j + 1,
                value: v.as_f64(),
            });
        }
        let total = next.iter().copied().fold(T::zero(), |a, b| a + b);
        let mass_drift = (total - T::one()).abs();
        max_mass_drift = max_mass_drift.max(mass_drift);
        if mass_drift > settings.drift_tol {
            return Err(Error::Conservation {
                quantity: "total population",
                drift: mass_drift.as_f64(),
                tolerance: settings.drift_tol.as_f64(),
                time: t.as_f64(),
            });
        }
        if settings.renormalize {
            next.iter_mut().for_each(|v| *v /= total);
        }
        let mu = params.mean_income(&next);
        let mu_drift = (mu - mu0).abs();
        max_mu_drift = max_mu_drift.max(mu_drift);
        if mu_drift > settings.drift_tol {
            return Err(Error::Conservation {
                quantity: "mean income",
                drift: mu_drift.as_f64(),
                tolerance: settings.drift_tol.as_f64(),
                time: t.as_f64(),
            });
        }

        step_change = sup_distance(&next, &x);
        std::mem::swap(&mut x, &mut next);
        params.rhs_into(&x, &mut k1)?;
        residual = sup_norm(&k1);
        trace.push(t, residual);
        observer.observe(t, &x, mu, residual);
    }

    let fit = trace.final_decade_fit(residual);
    Ok(EquilibriumState {
        mu: mu0,
        residual,
        elapsed_time: t,
        steps,
        rate_estimate: fit.map(|f| f.0),
        rate_fit_r2: fit.map(|f| f.1),
        step_change,
        max_mass_drift,
        max_mu_drift,
        x_eq: x,
    })
}

/// Integrates from the default low-middle profile at mean income `mu` and checks the
/// result against the stationarity system evaluated term by term.
pub fn solve_equilibrium<T: Scalar>(
    params: &ModelParams<T>,
    mu: T,
    settings: &IntegrationSettings<T>,
) -> Result<EquilibriumState<T>> {
    let x0 = make_initial_condition(&InitialConditionSpec::low_middle(mu.as_f64()), params.grid())?;
    solve_equilibrium_from(params, &x0, settings)
}

/// As [`solve_equilibrium`] but from a caller-supplied starting state.
pub fn solve_equilibrium_from<T: Scalar>(
    params: &ModelParams<T>,
    x0: &[T],
    settings: &IntegrationSettings<T>,
) -> Result<EquilibriumState<T>> {
    let state = integrate(params, x0, settings)?;
    let check = sup_norm(&params.stationarity_residual(&state.x_eq)?);
    let bound = T::lit(10.0) * settings.convergence_tol;
    if check > bound {
        return Err(Error::InternalConsistency(format!(
            "stationarity residual {check:e} exceeds {bound:e} at the integrated equilibrium"
        )));
    }
    Ok(state)
}

/// Serializable summary of an equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumRecord {
    pub params_hash: String,
    pub model: crate::model::ModelConfig,
    pub mu: f64,
    pub x_eq: Vec<f64>,
    pub residual: f64,
    pub elapsed_time: f64,
    pub steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_fit_r2: Option<f64>,
}

impl EquilibriumRecord {
    pub fn new<T: Scalar>(params: &ModelParams<T>, state: &EquilibriumState<T>) -> Result<Self> {
        let model = params
            .to_config()
            .ok_or_else(|| invalid("equilibrium records require a linear grid"))?;
        Ok(Self {
            params_hash: params_hash(&model),
            model,
            mu: state.mu.as_f64(),
            x_eq: to_f64_vec(&state.x_eq),
            residual: state.residual.as_f64(),
            elapsed_time: state.elapsed_time.as_f64(),
            steps: state.steps,
            rate: state.rate_estimate.map(Scalar::as_f64),
            rate_fit_r2: state.rate_fit_r2.map(Scalar::as_f64),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("equilibrium record serializes")
    }
}

/// Hex SHA-256 (first 16 digits) of the canonical TOML form of a model configuration.
pub fn params_hash(model: &crate::model::ModelConfig) -> String {
    let canonical = toml::to_string(model).expect("model config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
