//! SIR compartmental model: RK4 integration, (beta, gamma) fitting
//! against observed cumulative infections, and forward forecasting.

use crate::epidata::IncidenceSeries;
use crate::numeric::Real;
use crate::optim::nelder_mead;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SirError {
    #[error("integration step must be in (0, 0.5] days (got {0})")]
    BadStep(f64),
    #[error("integration horizon must be positive (got {0})")]
    BadHorizon(f64),
    #[error("need at least {need} incidence days to fit, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("population {population} must exceed the cumulative case count {cases}")]
    PopulationTooSmall { population: u64, cases: u64 },
    #[error("fit diverged: objective non-finite at optimum")]
    FitDiverged,
    #[error("infections never peaked within {0} days")]
    NoPeak(u32),
}

/// Transmission rate `beta` and recovery rate `gamma`, both per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams<F> {
    pub beta: F,
    pub gamma: F,
}

/// Population fractions in each compartment; sums to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirState<F> {
    pub s: F,
    pub i: F,
    pub r: F,
}

impl<F: Real> SirState<F> {
    /// Fully susceptible population seeded with infected fraction `i0`
    /// and already-removed fraction `r0`.
    pub fn seeded(i0: F, r0: F) -> Self {
        SirState {
            s: F::one() - i0 - r0,
            i: i0,
            r: r0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SirTrajectory<F> {
    pub start_date: NaiveDate,
    pub dt_days: F,
    pub states: Vec<SirState<F>>,
    pub population: u64,
}

/// Forward-forecast summary; burden figures are fixed fractions of the
/// peak number of simultaneously infected persons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SirForecast {
    pub r0: f64,
    pub herd_immunity_pct: f64,
    pub peak_date: NaiveDate,
    pub max_infected: u64,
    pub severe: u64,
    pub icu: u64,
    pub deaths: u64,
}

pub const SEVERE_FRACTION: f64 = 0.20;
pub const ICU_FRACTION: f64 = 0.06;
pub const DEATH_FRACTION: f64 = 0.035;

fn derivs<F: Real>(p: &SirParams<F>, st: &SirState<F>) -> SirState<F> {
    let infection = p.beta * st.s * st.i;
    let recovery = p.gamma * st.i;
    SirState {
        s: -infection,
        i: infection - recovery,
        r: recovery,
    }
}

fn rk4_step<F: Real>(p: &SirParams<F>, st: &SirState<F>, dt: F) -> SirState<F> {
    let half = F::from_f64_lossy(0.5);
    let sixth = F::from_f64_lossy(1.0 / 6.0);
    let two = F::from_f64_lossy(2.0);

    let add = |a: &SirState<F>, k: &SirState<F>, w: F| SirState {
        s: a.s + w * k.s,
        i: a.i + w * k.i,
        r: a.r + w * k.r,
    };

    let k1 = derivs(p, st);
    let k2 = derivs(p, &add(st, &k1, half * dt));
    let k3 = derivs(p, &add(st, &k2, half * dt));
    let k4 = derivs(p, &add(st, &k3, dt));

    SirState {
        s: st.s + dt * sixth * (k1.s + two * k2.s + two * k3.s + k4.s),
        i: st.i + dt * sixth * (k1.i + two * k2.i + two * k3.i + k4.i),
        r: st.r + dt * sixth * (k1.r + two * k2.r + two * k3.r + k4.r),
    }
}

/// Classical 4th-order Runge-Kutta integration over `floor(days/dt)`
/// steps; the returned vector includes the initial state.
pub fn integrate<F: Real>(
    p: &SirParams<F>,
    init: &SirState<F>,
    days: F,
    dt: F,
) -> Result<Vec<SirState<F>>, SirError> {
    if !(dt > F::zero()) || dt > F::from_f64_lossy(0.5) {
        return Err(SirError::BadStep(dt.as_f64()));
    }
    if !(days > F::zero()) {
        return Err(SirError::BadHorizon(days.as_f64()));
    }
    let steps = (days / dt).floor().as_f64() as usize;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(*init);
    let mut st = *init;
    for _ in 0..steps {
        st = rk4_step(p, &st, dt);
        states.push(st);
    }
    Ok(states)
}

pub fn r0<F: Real>(p: &SirParams<F>) -> F {
    p.beta / p.gamma
}

/// Herd-immunity threshold `(1 - 1/R0) * 100`, clamped at 0 for
/// sub-threshold epidemics.
pub fn herd_immunity_threshold<F: Real>(r0: F) -> F {
    let pct = (F::one() - F::one() / r0) * F::from_f64_lossy(100.0);
    pct.max(F::zero())
}

const FIT_DT: f64 = 0.1;
const FIT_MAX_EVALS: usize = 5000;
const FIT_TOL: f64 = 1e-7;

/// Fit `(beta, gamma)` by minimizing the RMSE between the observed
/// cumulative case counts and the model's cumulative infections
/// `N * (1 - s(t))`, Nelder-Mead over log-parameters from (0.5, 0.4).
///
/// If `recovered` cumulative counts are supplied, the first entry seeds
/// the initial removed fraction; otherwise r(0) = 0.
pub fn fit<F: Real>(
    incidence: &IncidenceSeries,
    population: u64,
    recovered: Option<&[u64]>,
) -> Result<SirParams<F>, SirError> {
    if incidence.len() < 10 {
        return Err(SirError::TooShort {
            need: 10,
            got: incidence.len(),
        });
    }
    let observed: Vec<f64> = incidence
        .counts
        .iter()
        .scan(0u64, |acc, &n| {
            *acc += n;
            Some(*acc as f64)
        })
        .collect();
    let total = *observed.last().unwrap() as u64;
    if population <= total {
        return Err(SirError::PopulationTooSmall {
            population,
            cases: total,
        });
    }

    let n = population as f64;
    let i0 = observed[0] / n;
    let rec0 = recovered.and_then(|r| r.first()).map_or(0.0, |&r| r as f64 / n);
    let init = SirState::<f64>::seeded(i0, rec0);
    let horizon = (observed.len() - 1) as f64;
    let per_day = (1.0 / FIT_DT).round() as usize;

    let objective = |x: &[f64]| -> f64 {
        let p = SirParams {
            beta: x[0].exp(),
            gamma: x[1].exp(),
        };
        let states = match integrate(&p, &init, horizon.max(FIT_DT), FIT_DT) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        let mut sse = 0.0;
        for (t, obs) in observed.iter().enumerate() {
            let idx = (t * per_day).min(states.len() - 1);
            let model = n * (1.0 - states[idx].s);
            sse += (model - obs).powi(2);
        }
        (sse / observed.len() as f64).sqrt()
    };

    let start = [0.5f64.ln(), 0.4f64.ln()];
    let result = nelder_mead(objective, &start, 0.5, FIT_TOL, FIT_MAX_EVALS);
    if !result.fx.is_finite() {
        return Err(SirError::FitDiverged);
    }
    Ok(SirParams {
        beta: F::from_f64_lossy(result.x[0].exp()),
        gamma: F::from_f64_lossy(result.x[1].exp()),
    })
}

const FORECAST_DT: f64 = 0.05;
const MAX_FORECAST_DAYS: u32 = 5 * 365;
const PEAK_CONFIRM_DAYS: usize = 30;

/// Integrate forward until the infectious fraction has peaked (confirmed
/// by 30 consecutive daily declines) and summarize the epidemic burden.
pub fn forecast<F: Real>(
    p: &SirParams<F>,
    init: &SirState<F>,
    population: u64,
    start_date: NaiveDate,
    horizon_days: u32,
) -> Result<SirForecast, SirError> {
    let p64 = SirParams {
        beta: p.beta.as_f64(),
        gamma: p.gamma.as_f64(),
    };
    let init64 = SirState {
        s: init.s.as_f64(),
        i: init.i.as_f64(),
        r: init.r.as_f64(),
    };
    let horizon = horizon_days.max(1).max(PEAK_CONFIRM_DAYS as u32);
    let states = integrate(&p64, &init64, horizon as f64, FORECAST_DT)?;
    let per_day = (1.0 / FORECAST_DT).round() as usize;
    let daily_i = |states: &[SirState<f64>]| -> Vec<f64> {
        states.iter().step_by(per_day).map(|st| st.i).collect()
    };

    let mut days = horizon;
    let mut series = daily_i(&states);
    let mut last = *states.last().unwrap();
    loop {
        if let Some(peak) = confirmed_peak(&series) {
            let max_infected = (population as f64 * series[peak]).round() as u64;
            let r0v = p64.beta / p64.gamma;
            return Ok(SirForecast {
                r0: r0v,
                herd_immunity_pct: herd_immunity_threshold(r0v),
                peak_date: start_date + chrono::Duration::days(peak as i64),
                max_infected,
                severe: (SEVERE_FRACTION * max_infected as f64).round() as u64,
                icu: (ICU_FRACTION * max_infected as f64).round() as u64,
                deaths: (DEATH_FRACTION * max_infected as f64).round() as u64,
            });
        }
        if days >= MAX_FORECAST_DAYS {
            return Err(SirError::NoPeak(MAX_FORECAST_DAYS));
        }
        let extend = (days).min(MAX_FORECAST_DAYS - days).max(1);
        let more = integrate(&p64, &last, extend as f64, FORECAST_DT)?;
        last = *more.last().unwrap();
        let extra = daily_i(&more);
        series.extend_from_slice(&extra[1..]);
        days += extend;
    }
}

/// Index of the maximum, provided it is followed by `PEAK_CONFIRM_DAYS`
/// consecutive declines (or the series started declining immediately).
fn confirmed_peak(daily_i: &[f64]) -> Option<usize> {
    let peak = daily_i
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)?;
    let after = &daily_i[peak..];
    if after.len() <= PEAK_CONFIRM_DAYS {
        return None;
    }
    let declining = after.windows(2).take(PEAK_CONFIRM_DAYS).all(|w| w[1] <= w[0]);
    declining.then_some(peak)
}
