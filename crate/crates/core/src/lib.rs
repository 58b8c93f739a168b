//! Discretized kinetic model of a closed market society with taxation and welfare.
//!
//! Individuals sit in `n` income classes and exchange money in pairwise encounters.
//! A tax is collected on every payment and redistributed as welfare. The crate
//! integrates the class dynamics to equilibrium and evaluates the Gini index, tax
//! revenue and the mobility indicators on the result.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision.
//!
//! ```
//! use kinmob::{solve_equilibrium, gini, ModelConfig, IntegrationSettings};
//!
//! let params = ModelConfig::default().build::<f64>().unwrap();
//! let eq = solve_equilibrium(&params, 150.0, &IntegrationSettings::default()).unwrap();
//! let g = gini(params.grid(), &eq.x_eq).unwrap();
//! assert!(g > 0.0 && g < 1.0);
//! ```

// `!(x > 0)` style guards are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod export;
pub mod indicators;
pub mod kaniadakis;
pub mod model;
pub mod scalar;
pub mod sweep;

pub use dynamics::{
    make_initial_condition, solve_equilibrium, solve_equilibrium_from, EquilibriumState,
    InitialConditionSpec, IntegrationSettings,
};
pub use error::{Error, Result};
pub use indicators::{gini, indicator_bundle, mobility_collective, tax_revenue, IndicatorBundle, MobilityReport};
pub use kaniadakis::{gini_vs_kappa_table, kappa_exp, kappa_from_temperature, kgen_gini, kgen_survival};
pub use model::{IncomeGrid, ModelConfig, ModelParams};
pub use scalar::Scalar;
pub use sweep::{correlation_report, midpoint_rates, Explorer, LevelLine, SweepCell};

pub type Model64 = ModelParams<f64>;
pub type Model32 = ModelParams<f32>;
pub type Grid64 = IncomeGrid<f64>;
pub type Grid32 = IncomeGrid<f32>;
pub type Settings64 = IntegrationSettings<f64>;
pub type Settings32 = IntegrationSettings<f32>;
pub type Equilibrium64 = EquilibriumState<f64>;
pub type Equilibrium32 = EquilibriumState<f32>;
pub type Explorer64 = Explorer<f64>;
pub type Explorer32 = Explorer<f32>;
pub type Mobility64 = MobilityReport<f64>;
