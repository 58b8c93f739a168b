use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structural identity of the model failed to hold. Signals a construction bug
    /// or an exchange amount too large for the grid.
    #[error("internal consistency violated: {0}")]
    InternalConsistency(String),

    /// The welfare-weighted population mass vanished.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// No interior class is populated, so class-level mobility is undefined.
    #[error("degenerate population: X_1 + X_n = {boundary_mass} leaves no interior mass")]
    DegeneratePopulation { boundary_mass: f64 },

    #[error(
        "no convergence by t = {time}: residual {residual:e} above tolerance {tolerance:e}"
    )]
    NonConvergence {
        time: f64,
        residual: f64,
        tolerance: f64,
        last_state: Vec<f64>,
    },

    #[error(
        "population of class {class} went negative ({value:e}) at t = {time}; retry with a smaller dt"
    )]
    Stability { time: f64, class: usize, value: f64 },

    #[error("{quantity} drifted by {drift:e} (tolerance {tolerance:e}) at t = {time}")]
    Conservation {
        quantity: &'static str,
        drift: f64,
        tolerance: f64,
        time: f64,
    },

    #[error(
        "target Gini {target} not bracketed: G({lo}) = {g_lo}, G({hi}) = {g_hi}"
    )]
    CalibrationFailure {
        target: f64,
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("kappa-generalized mean diverges for alpha = {alpha}, kappa = {kappa}")]
    DivergentMean { alpha: f64, kappa: f64 },

    #[error("quadrature reached error bound {achieved:e}, target {target:e}")]
    QuadratureAccuracy { achieved: f64, target: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
