//! Branching-process incidence simulator with known ground-truth R,
//! used as an independent validation oracle for the estimators.

use crate::epidata::IncidenceSeries;
use crate::gentime::GenTimeDist;
use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("case cap {cap} reached on day {day}, before 2x the generation-time support")]
    Exploded { cap: u64, day: usize },
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub true_r: f64,
    pub gt: GenTimeDist<f64>,
    pub seed_cases: u64,
    pub horizon_days: usize,
    pub rng_seed: u64,
    pub max_total_cases: u64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub series: IncidenceSeries,
    /// Day at which the case cap stopped the simulation, if it did.
    pub stopped_at: Option<usize>,
}

/// Each day draws `N_t ~ Poisson(true_r * sum_j w_j N_{t-j})`, the
/// generative dual of the ML estimator's model. Deterministic for a
/// given `rng_seed`.
pub fn simulate_branching(c: &SimConfig) -> Result<SimOutcome, SimError> {
    if !(c.true_r > 0.0) {
        return Err(SimError::InvalidConfig(format!("true_r {} must be positive", c.true_r)));
    }
    if c.seed_cases < 1 {
        return Err(SimError::InvalidConfig("seed_cases must be at least 1".into()));
    }
    if c.max_total_cases < c.seed_cases {
        return Err(SimError::InvalidConfig("max_total_cases below seed_cases".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(c.rng_seed);
    let k = c.gt.support();
    let mut counts: Vec<u64> = vec![c.seed_cases];
    let mut total = c.seed_cases;
    let mut stopped_at = None;

    for t in 1..=c.horizon_days {
        let intensity: f64 = (1..=k.min(t))
            .map(|j| c.gt.weight_at(j) * counts[t - j] as f64)
            .sum::<f64>()
            * c.true_r;
        let draw = if intensity > 0.0 {
            Poisson::new(intensity).expect("positive intensity").sample(&mut rng) as u64
        } else {
            0
        };
        counts.push(draw);
        total += draw;
        if total >= c.max_total_cases {
            stopped_at = Some(t);
            break;
        }
    }

    if let Some(day) = stopped_at {
        if day < 2 * k {
            return Err(SimError::Exploded {
                cap: c.max_total_cases,
                day,
            });
        }
    }

    Ok(SimOutcome {
        series: IncidenceSeries {
            region: format!("sim-r{}", c.true_r),
            start_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            counts,
        },
        stopped_at,
    })
}
