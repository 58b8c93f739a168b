//! Inequality and mobility indicators evaluated on (equilibrium) population states.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::model::{check_simplex, IncomeGrid, ModelParams};
use crate::scalar::Scalar;

/// Class-level Lorenz polyline from `(0, 0)` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurve<T> {
    points: Vec<(T, T)>,
}

impl<T: Scalar> LorenzCurve<T> {
    /// `(cumulative population, cumulative income share)` pairs.
    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// `1 - 2 · (trapezoidal area under the polyline)`.
    pub fn gini(&self) -> T {
        // each trapezoid contributes dx (y0 + y1) / 2 to the area
        let twice_area = self
            .points
            .windows(2)
            .fold(T::zero(), |acc, w| acc + (w[1].0 - w[0].0) * (w[0].1 + w[1].1));
        T::one() - twice_area
    }
}

pub fn lorenz<T: Scalar>(grid: &IncomeGrid<T>, x: &[T]) -> Result<LorenzCurve<T>> {
    if x.len() != grid.n() {
        return Err(invalid(format!(
            "state has {} components, grid has {} classes",
            x.len(),
            grid.n()
        )));
    }
    check_simplex(x)?;
    let population = x.iter().copied().fold(T::zero(), |a, b| a + b);
    let income = grid.mean_income(x);
    if !(income > T::zero()) {
        return Err(Error::DegenerateState(format!("mean income is {income}")));
    }
    let mut points = Vec::with_capacity(x.len() + 1);
    points.push((T::zero(), T::zero()));
    let (mut cum_pop, mut cum_inc) = (T::zero(), T::zero());
    for (xi, ri) in x.iter().zip(grid.averages()) {
        cum_pop += *xi;
        cum_inc += *xi * *ri;
        points.push((cum_pop / population, cum_inc / income));
    }
    Ok(LorenzCurve { points })
}

pub fn gini<T: Scalar>(grid: &IncomeGrid<T>, x: &[T]) -> Result<T> {
    Ok(lorenz(grid, x)?.gini())
}

/// Tax collected (and redistributed) per unit time, written as the literal triple sum
/// over payer, receiver and beneficiary class.
pub fn tax_revenue_triple_sum<T: Scalar>(params: &ModelParams<T>, x: &[T]) -> Result<T> {
    params.check_simplex(x)?;
    let n = params.n();
    let mass = params.welfare_mass(x)?;
    let s = params.exchange_amount();
    let (p, tau, w) = (params.encounter(), params.tax(), params.welfare());
    let mut total = T::zero();
    for h in 1..=n {
        for k in 1..=n {
            for j in 1..n {
                total += p.get(h, k) * s * tau.rate(k) * (w.weight(j) * x[j - 1] / mass)
                    * x[h - 1]
                    * x[k - 1];
            }
        }
    }
    Ok(total)
}

/// Same quantity as [`tax_revenue_triple_sum`] with the beneficiary sum factored out.
pub fn tax_revenue_factored<T: Scalar>(params: &ModelParams<T>, x: &[T]) -> Result<T> {
    params.check_simplex(x)?;
    let n = params.n();
    let mass = params.welfare_mass(x)?;
    let below_top = mass - params.welfare().weight(n) * x[n - 1];
    Ok(params.exchange_amount() * params.taxed_exchange_rate(x) * below_top / mass)
}

/// Tax revenue, computed both ways and cross-checked.
pub fn tax_revenue<T: Scalar>(params: &ModelParams<T>, x: &[T]) -> Result<T> {
    let direct = tax_revenue_triple_sum(params, x)?;
    let factored = tax_revenue_factored(params, x)?;
    let scale = direct.abs().max(factored.abs()).max(T::min_positive_value());
    if (direct - factored).abs() > T::structural_tol() * scale.max(T::one()) {
        return Err(Error::InternalConsistency(format!(
            "tax revenue forms disagree: {direct} vs {factored}"
        )));
    }
    Ok(factored)
}

/// One-step probability of advancing to the next class, split by cause.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Advancement<T> {
    /// Through direct exchanges (net of tax).
    pub exchange: T,
    /// Through welfare provisions.
    pub welfare: T,
}

impl<T: Scalar> Advancement<T> {
    pub fn total(&self) -> T {
        self.exchange + self.welfare
    }

    fn minus(&self, other: &Self) -> Self {
        Self {
            exchange: self.exchange - other.exchange,
            welfare: self.welfare - other.welfare,
        }
    }
}

fn check_interior<T>(params: &ModelParams<T>, i: usize) -> Result<()>
where
    T: Scalar,
{
    let n = params.n();
    if i < 2 || i > n - 1 {
        return Err(invalid(format!(
            "mobility is defined for interior classes 2..={}, got {i}",
            n - 1
        )));
    }
    Ok(())
}

fn interior_mass<T: Scalar>(x: &[T]) -> Result<T> {
    let n = x.len();
    let interior = T::one() - x[0] - x[n - 1];
    if !(interior > T::epsilon()) {
        return Err(Error::DegeneratePopulation {
            boundary_mass: (x[0] + x[n - 1]).as_f64(),
        });
    }
    Ok(interior)
}

/// Shared per-state factors of the mobility formulas.
struct MobilityTerms<T> {
    welfare_mass: T,
    taxed_rate: T,
}

impl<T: Scalar> MobilityTerms<T> {
    fn new(params: &ModelParams<T>, x: &[T]) -> Result<Self> {
        params.check_simplex(x)?;
        Ok(Self {
            welfare_mass: params.welfare_mass(x)?,
            taxed_rate: params.taxed_exchange_rate(x),
        })
    }

    fn individual(&self, params: &ModelParams<T>, x: &[T], i: usize) -> Advancement<T> {
        let n = params.n();
        let p = params.encounter();
        let step = params.exchange_amount() / params.grid().step_above(i);
        let keep = T::one() - params.tax().rate(i);
        let paid_to_i = (1..=n).fold(T::zero(), |acc, k| acc + p.get(k, i) * keep * x[k - 1]);
        Advancement {
            exchange: step * paid_to_i,
            welfare: step * params.welfare().weight(i) / self.welfare_mass * self.taxed_rate,
        }
    }
}

/// Probabilities that a single individual of interior class `i` is promoted.
pub fn mobility_individual<T: Scalar>(
    params: &ModelParams<T>,
    x_eq: &[T],
    i: usize,
) -> Result<Advancement<T>> {
    check_interior(params, i)?;
    Ok(MobilityTerms::new(params, x_eq)?.individual(params, x_eq, i))
}

/// Population-weighted promotion probabilities of class `i`, normalised by the interior mass.
pub fn mobility_class<T: Scalar>(
    params: &ModelParams<T>,
    x_eq: &[T],
    i: usize,
) -> Result<Advancement<T>> {
    check_interior(params, i)?;
    let terms = MobilityTerms::new(params, x_eq)?;
    let interior = interior_mass(x_eq)?;
    let ind = terms.individual(params, x_eq, i);
    let weight = x_eq[i - 1] / interior;
    Ok(Advancement {
        exchange: ind.exchange * weight,
        welfare: ind.welfare * weight,
    })
}

/// Individual, class and collective advancement probabilities over classes `2..=n-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityReport<T> {
    individual: Vec<Advancement<T>>,
    class: Vec<Advancement<T>>,
    collective: Advancement<T>,
}

impl<T: Scalar> MobilityReport<T> {
    /// Class numbers covered by the report.
    pub fn classes(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.individual.len() + 1
    }

    /// Individual promotion probabilities of class `i`; `None` outside `2..=n-1`.
    pub fn individual(&self, i: usize) -> Option<Advancement<T>> {
        i.checked_sub(2).and_then(|j| self.individual.get(j)).copied()
    }

    pub fn class(&self, i: usize) -> Option<Advancement<T>> {
        i.checked_sub(2).and_then(|j| self.class.get(j)).copied()
    }

    pub fn individual_all(&self) -> &[Advancement<T>] {
        &self.individual
    }

    pub fn class_all(&self) -> &[Advancement<T>] {
        &self.class
    }

    pub fn collective(&self) -> Advancement<T> {
        self.collective
    }

    /// Mobility `M`: collective promotion probability (exchange plus welfare part).
    pub fn mobility(&self) -> T {
        self.collective.total()
    }
}

pub fn mobility_collective<T: Scalar>(
    params: &ModelParams<T>,
    x_eq: &[T],
) -> Result<MobilityReport<T>> {
    let terms = MobilityTerms::new(params, x_eq)?;
    let interior = interior_mass(x_eq)?;
    let n = params.n();
    let individual: Vec<_> = (2..n).map(|i| terms.individual(params, x_eq, i)).collect();
    let class = individual
        .iter()
        .zip(&x_eq[1..n - 1])
        .map(|(a, xi)| Advancement {
            exchange: a.exchange * *xi / interior,
            welfare: a.welfare * *xi / interior,
        })
        .collect();

    // collective sums accumulated directly from the formulas; the spacing factor
    // S / (r_{i+1} - r_i) stays inside the sum over i
    let p = params.encounter();
    let s = params.exchange_amount();
    let (mut exchange, mut welfare) = (T::zero(), T::zero());
    for i in 2..n {
        let step = s / params.grid().step_above(i);
        let keep = T::one() - params.tax().rate(i);
        let mut paid = T::zero();
        for k in 1..=n {
            paid += p.get(k, i) * keep * x_eq[k - 1] * x_eq[i - 1];
        }
        exchange += step * paid;
        welfare += step * params.welfare().weight(i) * x_eq[i - 1] / terms.welfare_mass
            * terms.taxed_rate;
    }
    Ok(MobilityReport {
        individual,
        class,
        collective: Advancement {
            exchange: exchange / interior,
            welfare: welfare / interior,
        },
    })
}

/// Regime-b minus regime-a differences of the mobility indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityDelta<T> {
    pub individual: Vec<Advancement<T>>,
    pub class: Vec<Advancement<T>>,
    pub delta_m: T,
}

impl<T: Scalar> MobilityDelta<T> {
    pub fn classes(&self) -> std::ops::RangeInclusive<usize> {
        2..=self.individual.len() + 1
    }
}

pub fn mobility_delta<T: Scalar>(
    params_a: &ModelParams<T>,
    eq_a: &[T],
    params_b: &ModelParams<T>,
    eq_b: &[T],
) -> Result<MobilityDelta<T>> {
    if params_a.grid() != params_b.grid() {
        return Err(invalid(format!(
            "regimes must share the income grid (n = {} vs {})",
            params_a.n(),
            params_b.n()
        )));
    }
    let a = mobility_collective(params_a, eq_a)?;
    let b = mobility_collective(params_b, eq_b)?;
    Ok(delta_of_reports(&a, &b))
}

pub fn delta_of_reports<T: Scalar>(a: &MobilityReport<T>, b: &MobilityReport<T>) -> MobilityDelta<T> {
    MobilityDelta {
        individual: b.individual.iter().zip(&a.individual).map(|(y, x)| y.minus(x)).collect(),
        class: b.class.iter().zip(&a.class).map(|(y, x)| y.minus(x)).collect(),
        delta_m: b.mobility() - a.mobility(),
    }
}

/// Everything reported for one equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorBundle<T> {
    pub mu: T,
    pub gini: T,
    pub tax_revenue: T,
    pub mobility: MobilityReport<T>,
}

pub fn indicator_bundle<T: Scalar>(params: &ModelParams<T>, x_eq: &[T]) -> Result<IndicatorBundle<T>> {
    Ok(IndicatorBundle {
        mu: params.mean_income(x_eq),
        gini: gini(params.grid(), x_eq)?,
        tax_revenue: tax_revenue(params, x_eq)?,
        mobility: mobility_collective(params, x_eq)?,
    })
}

/// Writes one row per bundle:
/// `tau_min, tau_max, gamma, mu, G, TR, M, Pind_2.., Pclass_2..`.
pub fn write_bundles_csv<'a, T: Scalar + 'a, W: Write>(
    rows: impl IntoIterator<Item = (&'a ModelParams<T>, &'a IndicatorBundle<T>)>,
    out: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header_written = false;
    for (params, bundle) in rows {
        let classes = bundle.mobility.classes();
        if !header_written {
            let mut header: Vec<String> =
                ["tau_min", "tau_max", "gamma", "mu", "G", "TR", "M"].map(String::from).to_vec();
            header.extend(classes.clone().map(|i| format!("Pind_{i}")));
            header.extend(classes.clone().map(|i| format!("Pclass_{i}")));
            w.write_record(&header)?;
            header_written = true;
        }
        let mut row = vec![
            params.tax().min().to_string(),
            params.tax().max().to_string(),
            params.welfare().gamma().to_string(),
            bundle.mu.to_string(),
            bundle.gini.to_string(),
            bundle.tax_revenue.to_string(),
            bundle.mobility.mobility().to_string(),
        ];
        row.extend(bundle.mobility.individual_all().iter().map(|a| a.total().to_string()));
        row.extend(bundle.mobility.class_all().iter().map(|a| a.total().to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn grid() -> IncomeGrid<f64> {
        IncomeGrid::linear(15, 25.0).unwrap()
    }

    fn unit(k: usize) -> Vec<f64> {
        let mut x = vec![0.0; 15];
        x[k - 1] = 1.0;
        x
    }

    fn two_point() -> Vec<f64> {
        let mut x = vec![0.0; 15];
        x[0] = 0.5;
        x[14] = 0.5;
        x
    }

    #[test]
    fn single_class_is_perfect_equality() {
        for k in 1..=15 {
            let l = lorenz(&grid(), &unit(k)).unwrap();
            assert_eq!(*l.points().first().unwrap(), (0.0, 0.0));
            assert_eq!(*l.points().last().unwrap(), (1.0, 1.0));
            assert_eq!(l.gini(), 0.0);
        }
    }

    #[test]
    fn two_point_lorenz_and_gini() {
        let l = lorenz(&grid(), &two_point()).unwrap();
        let mid = l.points()[1];
        assert_eq!(mid.0, 0.5);
        assert!((mid.1 - 1.0 / 30.0).abs() < 1e-15);
        let g = l.gini();
        assert!((g - 7.0 / 15.0).abs() < 1e-14, "{g}");
    }

    #[test]
    fn lorenz_is_convex() {
        let x: Vec<f64> = (1..=15).map(|i| (16 - i) as f64 / 120.0).collect();
        let l = lorenz(&grid(), &x).unwrap();
        let slopes: Vec<f64> = l
            .points()
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        assert!(slopes.windows(2).all(|s| s[0] <= s[1] + 1e-12));
    }

    fn default_params() -> ModelParams<f64> {
        ModelConfig::default().build().unwrap()
    }

    #[test]
    fn no_tax_no_revenue() {
        let m: ModelParams<f64> = ModelConfig::default().with_rates(0.0, 0.0).build().unwrap();
        let x = vec![1.0 / 15.0; 15];
        assert_eq!(tax_revenue(&m, &x).unwrap(), 0.0);
        let r = mobility_collective(&m, &x).unwrap();
        assert_eq!(r.collective().welfare, 0.0);
    }

    #[test]
    fn top_class_only_pays_no_tax() {
        let m = default_params();
        assert_eq!(tax_revenue_triple_sum(&m, &unit(15)).unwrap(), 0.0);
        assert_eq!(tax_revenue_factored(&m, &unit(15)).unwrap(), 0.0);
    }

    #[test]
    fn revenue_forms_agree() {
        let m: ModelParams<f64> = ModelConfig::default().with_rates(0.2, 0.55).with_gamma(0.3).build().unwrap();
        let x: Vec<f64> = (1..=15).map(|i| (16 - i) as f64 / 120.0).collect();
        let a = tax_revenue_triple_sum(&m, &x).unwrap();
        let b = tax_revenue_factored(&m, &x).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn mobility_index_bounds() {
        let m = default_params();
        let x = vec![1.0 / 15.0; 15];
        assert!(mobility_individual(&m, &x, 1).is_err());
        assert!(mobility_individual(&m, &x, 15).is_err());
        assert!(mobility_individual(&m, &x, 2).is_ok());
        assert!(mobility_class(&m, &x, 14).is_ok());
    }

    #[test]
    fn empty_class_has_no_class_mobility() {
        let m = default_params();
        let mut x = vec![1.0 / 14.0; 15];
        x[6] = 0.0;
        let a = mobility_class(&m, &x, 7).unwrap();
        assert_eq!(a.exchange, 0.0);
        assert_eq!(a.welfare, 0.0);
    }

    #[test]
    fn boundary_only_population_is_degenerate() {
        let m = default_params();
        assert!(matches!(
            mobility_class(&m, &two_point(), 5),
            Err(Error::DegeneratePopulation { .. })
        ));
        assert!(mobility_collective(&m, &two_point()).is_err());
    }

    #[test]
    fn collective_is_sum_of_classes() {
        let m = default_params();
        let x: Vec<f64> = (1..=15).map(|i| (16 - i) as f64 / 120.0).collect();
        let r = mobility_collective(&m, &x).unwrap();
        let ex: f64 = r.class_all().iter().map(|a| a.exchange).sum();
        let we: f64 = r.class_all().iter().map(|a| a.welfare).sum();
        assert!((ex - r.collective().exchange).abs() < 1e-14);
        assert!((we - r.collective().welfare).abs() < 1e-14);
        for i in r.classes() {
            let direct = mobility_class(&m, &x, i).unwrap();
            assert!((direct.total() - r.class(i).unwrap().total()).abs() < 1e-16);
        }
        assert!(r.individual(1).is_none() && r.individual(15).is_none());
    }

    #[test]
    fn identical_regimes_have_zero_delta() {
        let m = default_params();
        let x: Vec<f64> = (1..=15).map(|i| (16 - i) as f64 / 120.0).collect();
        let d = mobility_delta(&m, &x, &m, &x).unwrap();
        assert_eq!(d.delta_m, 0.0);
        assert!(d.individual.iter().chain(&d.class).all(|a| a.total() == 0.0));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = default_params();
        let b: ModelParams<f64> = ModelConfig { n: 10, ..ModelConfig::default() }.build().unwrap();
        let xa = vec![1.0 / 15.0; 15];
        let xb = vec![0.1; 10];
        assert!(matches!(mobility_delta(&a, &xa, &b, &xb), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bundle_csv_layout() {
        let m = default_params();
        let x = vec![1.0 / 15.0; 15];
        let b = indicator_bundle(&m, &x).unwrap();
        let mut buf = Vec::new();
        write_bundles_csv([(&m, &b)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("tau_min,tau_max,gamma,mu,G,TR,M,Pind_2"));
        assert!(header.ends_with("Pclass_14"));
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 7 + 2 * 13);
    }
}
