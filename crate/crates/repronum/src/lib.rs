//! Estimation of epidemic reproduction numbers from daily incidence
//! series, with SIR forward forecasts.
//!
//! Five methods are provided: an SIR compartmental-model fit and four
//! statistical estimators (exponential growth, maximum likelihood,
//! sequential Bayesian, time-dependent). The numerical core is generic
//! over the scalar type; the aliases below fix `f64`, which is what the
//! CLI uses.

pub mod epidata;
pub mod gentime;
pub mod numeric;
pub mod optim;
pub mod report;
pub mod restimators;
pub mod simoracle;
pub mod sir;

pub use epidata::{CumulativeSeries, IncidenceSeries};
pub use restimators::Method;

/// Default-precision aliases for the generic core types.
pub type GenTime = gentime::GenTimeDist<f64>;
pub type SirParams = sir::SirParams<f64>;
pub type SirState = sir::SirState<f64>;
pub type REstimate = restimators::REstimate<f64>;
pub type RTrajectory = restimators::RTrajectory<f64>;
pub type GrowthRate = restimators::GrowthRate<f64>;
