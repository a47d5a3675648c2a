//! Generation-time (serial-interval) distributions on a daily lattice.
//!
//! The distribution is a probability vector `w_1..w_k` over whole-day
//! lags starting at 1; lag 0 carries no mass. The moment-generating
//! function links an exponential growth rate to a reproduction number
//! via `R = 1 / M(-r)`.

use crate::numeric::Real;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GenTimeError {
    #[error("generation-time mean and sd must be positive (mean={mean}, sd={sd})")]
    InvalidMoment { mean: f64, sd: f64 },
    #[error("tail mass {loss:.4} beyond max_lag {max_lag} exceeds 1%")]
    TruncationLoss { max_lag: usize, loss: f64 },
    #[error("point-mass lag must be at least 1 day (got {0})")]
    InvalidLag(i64),
}

/// Discrete generation-interval distribution; `weights[j-1]` is the
/// probability of an infector-infectee lag of exactly `j` days.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenTimeDist<F> {
    weights: Vec<F>,
    mean_days: F,
    sd_days: F,
}

impl<F: Real> GenTimeDist<F> {
    /// Discretize a gamma distribution with the given continuous moments
    /// onto lags `1..=max_lag` by CDF differences at half-integer
    /// boundaries, then renormalize.
    pub fn discretize_gamma(mean_days: f64, sd_days: f64, max_lag: usize) -> Result<Self, GenTimeError> {
        if !(mean_days > 0.0) || !(sd_days > 0.0) {
            return Err(GenTimeError::InvalidMoment {
                mean: mean_days,
                sd: sd_days,
            });
        }
        let max_lag = max_lag.max(1);
        let shape = (mean_days / sd_days).powi(2);
        let rate = mean_days / (sd_days * sd_days); // statrs parameterizes by rate = 1/scale
        let gamma = Gamma::new(shape, rate).expect("validated gamma parameters");

        let mut raw: Vec<f64> = (1..=max_lag)
            .map(|j| gamma.cdf(j as f64 + 0.5) - gamma.cdf(j as f64 - 0.5))
            .collect();
        let total: f64 = raw.iter().sum();
        // mass the lag lattice fails to cover: beyond max_lag plus below half a day
        let loss = 1.0 - total;
        if loss > 0.01 {
            return Err(GenTimeError::TruncationLoss { max_lag, loss });
        }
        for w in &mut raw {
            *w /= total;
        }
        Ok(Self::from_normalized(raw))
    }

    /// All mass on a single lag of `t` days; the constant-generation-time
    /// special case where `R = e^{rT}`.
    pub fn point_mass(t: i64) -> Result<Self, GenTimeError> {
        if t < 1 {
            return Err(GenTimeError::InvalidLag(t));
        }
        let mut weights = vec![F::zero(); t as usize];
        weights[t as usize - 1] = F::one();
        Ok(GenTimeDist {
            weights,
            mean_days: F::from_f64_lossy(t as f64),
            sd_days: F::zero(),
        })
    }

    pub(crate) fn from_weights_unchecked(weights: Vec<F>, mean_days: F, sd_days: F) -> Self {
        GenTimeDist {
            weights,
            mean_days,
            sd_days,
        }
    }

    fn from_normalized(raw: Vec<f64>) -> Self {
        let mean: f64 = raw.iter().enumerate().map(|(i, w)| (i + 1) as f64 * w).sum();
        let var: f64 = raw
            .iter()
            .enumerate()
            .map(|(i, w)| ((i + 1) as f64 - mean).powi(2) * w)
            .sum();
        GenTimeDist {
            weights: raw.into_iter().map(F::from_f64_lossy).collect(),
            mean_days: F::from_f64_lossy(mean),
            sd_days: F::from_f64_lossy(var.sqrt()),
        }
    }

    /// Moment-generating function `M(x) = sum_j w_j e^{x j}`.
    pub fn mgf_at(&self, x: F) -> F {
        self.weights
            .iter()
            .enumerate()
            .map(|(i, &w)| w * (x * F::from_usize_lossy(i + 1)).exp())
            .sum()
    }

    /// Maximum lag with any mass (the support size `k`).
    pub fn support(&self) -> usize {
        self.weights.len()
    }

    /// Probability of a lag of `days`; zero outside `1..=k`.
    pub fn weight_at(&self, days: usize) -> F {
        if days >= 1 && days <= self.weights.len() {
            self.weights[days - 1]
        } else {
            F::zero()
        }
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    /// Realized mean of the discrete distribution, in days.
    pub fn mean_days(&self) -> F {
        self.mean_days
    }

    /// Realized standard deviation of the discrete distribution, in days.
    pub fn sd_days(&self) -> F {
        self.sd_days
    }
}
