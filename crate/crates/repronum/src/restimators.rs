//! The four statistical reproduction-number estimators: exponential
//! growth (EG), maximum likelihood (ML), sequential Bayesian (SB) and
//! time-dependent (TD).
//!
//! EG and ML produce a single [`REstimate`]; SB and TD produce a
//! per-day [`RTrajectory`]. All estimators consume an incidence series
//! and a generation-time distribution; TD additionally takes a seeded
//! RNG for its resampling interval.

use crate::epidata::IncidenceSeries;
use crate::gentime::GenTimeDist;
use crate::numeric::Real;
use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("series degenerate: {0}")]
    Degenerate(String),
    #[error("growth-rate regression failed to converge in {0} iterations")]
    NoConverge(usize),
    #[error("no secondary-case mass: every day lacks infectious history")]
    NoSecondaryMass,
    #[error("bad posterior grid: grid_max {grid_max}, grid_step {grid_step}")]
    BadGrid { grid_max: f64, grid_step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Sir,
    Eg,
    Ml,
    Sb,
    Td,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Sir => "SIR",
            Method::Eg => "EG",
            Method::Ml => "ML",
            Method::Sb => "SB",
            Method::Td => "TD",
        };
        f.write_str(s)
    }
}

/// Point estimate of R with a 95% confidence/credible interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct REstimate<F> {
    pub method: Method,
    pub r: F,
    pub ci_low: F,
    pub ci_high: F,
    /// Day-index window (begin, end) of the series the estimate used.
    pub window: (usize, usize),
}

/// Per-day R(t) estimates with 95% interval bands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RTrajectory<F> {
    pub start_date: NaiveDate,
    pub r_mean: Vec<F>,
    pub r_low: Vec<F>,
    pub r_high: Vec<F>,
    /// Days whose estimate is biased low because future infectees are
    /// unobserved (TD right edge); always false for SB.
    pub censored: Vec<bool>,
}

/// Per-day exponential growth rate with its asymptotic standard error.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GrowthRate<F> {
    pub r: F,
    pub stderr: F,
}

const IRLS_MAX_ITER: usize = 100;
const IRLS_TOL: f64 = 1e-10;

/// Poisson regression of the daily counts on time with a log link,
/// fitted by iteratively reweighted least squares.
pub fn fit_growth_rate<F: Real>(s: &IncidenceSeries) -> Result<GrowthRate<F>, EstimatorError> {
    let n = s.counts.len();
    if n < 5 {
        return Err(EstimatorError::Degenerate(format!(
            "need at least 5 days, got {n}"
        )));
    }
    if s.counts.iter().filter(|&&c| c > 0).count() < 3 {
        return Err(EstimatorError::Degenerate(
            "fewer than 3 nonzero days".into(),
        ));
    }

    let y: Vec<f64> = s.counts.iter().map(|&c| c as f64).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut a = mean.max(1e-12).ln();
    let mut b = 0.0f64;

    for _ in 0..IRLS_MAX_ITER {
        // weighted normal equations for X = [1, t], W = diag(mu)
        let (mut sw, mut swt, mut swtt, mut swz, mut swtz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, &yt) in y.iter().enumerate() {
            let t = t as f64;
            let eta = (a + b * t).min(700.0);
            let mu = eta.exp().max(1e-300);
            let z = eta + (yt - mu) / mu;
            sw += mu;
            swt += mu * t;
            swtt += mu * t * t;
            swz += mu * z;
            swtz += mu * t * z;
        }
        let det = sw * swtt - swt * swt;
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(EstimatorError::Degenerate("singular design".into()));
        }
        let a_new = (swtt * swz - swt * swtz) / det;
        let b_new = (sw * swtz - swt * swz) / det;
        let delta = (a_new - a).abs().max((b_new - b).abs());
        a = a_new;
        b = b_new;
        if delta < IRLS_TOL {
            // var(b) from the inverse Fisher information
            let var_b = sw / det;
            return Ok(GrowthRate {
                r: F::from_f64_lossy(b),
                stderr: F::from_f64_lossy(var_b.max(0.0).sqrt()),
            });
        }
    }
    Err(EstimatorError::NoConverge(IRLS_MAX_ITER))
}

/// Growth rate to reproduction number: `R = 1 / M(-r)`. For a point
/// mass at lag T this is exactly `e^{rT}`.
pub fn growth_to_r<F: Real>(g: &GenTimeDist<F>, r: F) -> F {
    F::one() / g.mgf_at(-r)
}

/// Exponential-growth estimator: fit the growth rate, then map it (and
/// its 95% Wald endpoints) through the generation-time MGF.
pub fn estimate_eg<F: Real>(
    s: &IncidenceSeries,
    g: &GenTimeDist<F>,
) -> Result<REstimate<F>, EstimatorError> {
    let gr = fit_growth_rate::<F>(s)?;
    let z = F::from_f64_lossy(1.96);
    Ok(REstimate {
        method: Method::Eg,
        r: growth_to_r(g, gr.r),
        ci_low: growth_to_r(g, gr.r - z * gr.stderr),
        ci_high: growth_to_r(g, gr.r + z * gr.stderr),
        window: (0, s.counts.len() - 1),
    })
}

/// Expected infectious pressure on day `t` under unit R:
/// `Lambda_t = sum_{j=1..min(k,t)} w_j * N_{t-j}`.
fn infection_pressure<F: Real>(counts: &[u64], g: &GenTimeDist<F>, t: usize) -> F {
    let k = g.support();
    (1..=k.min(t))
        .map(|j| g.weight_at(j) * F::from_f64_lossy(counts[t - j] as f64))
        .sum()
}

const PROFILE_CHI2_95: f64 = 3.841;
const PROFILE_BISECT_TOL: f64 = 1e-6;

/// Maximum-likelihood estimator with Poisson secondary-case counts.
///
/// The point estimate is the closed-form stationary point
/// `sum N_t / sum Lambda_t`; when the series is longer than the
/// generation-time support the sums start at day `k`, so every included
/// day has a complete infectious history. The 95% CI comes from the
/// profile likelihood at the chi-square(1) cutoff.
pub fn estimate_ml<F: Real>(
    s: &IncidenceSeries,
    g: &GenTimeDist<F>,
) -> Result<REstimate<F>, EstimatorError> {
    let counts = &s.counts;
    if counts.len() < 2 {
        return Err(EstimatorError::Degenerate("need at least 2 days".into()));
    }
    let k = g.support();
    let t_start = if counts.len() > k + 1 { k } else { 1 };

    let terms: Vec<(F, F)> = (t_start..counts.len())
        .map(|t| (F::from_f64_lossy(counts[t] as f64), infection_pressure(counts, g, t)))
        .collect();
    let sum_n: F = terms.iter().map(|&(n, _)| n).sum();
    let sum_lambda: F = terms.iter().map(|&(_, l)| l).sum();
    if !(sum_lambda > F::zero()) {
        return Err(EstimatorError::NoSecondaryMass);
    }
    if !(sum_n > F::zero()) {
        return Err(EstimatorError::Degenerate("no cases after day 0".into()));
    }
    let r_hat = sum_n / sum_lambda;

    // log-likelihood up to R-independent constants
    let loglik = |r: F| -> F {
        terms
            .iter()
            .filter(|&&(_, l)| l > F::zero())
            .map(|&(n, l)| {
                let mu = r * l;
                -mu + n * mu.ln()
            })
            .sum()
    };
    let target = loglik(r_hat) - F::from_f64_lossy(PROFILE_CHI2_95 / 2.0);
    let tol = F::from_f64_lossy(PROFILE_BISECT_TOL);

    let bisect = |mut inside: F, mut outside: F| -> F {
        while (outside - inside).abs() > tol {
            let mid = (inside + outside) / F::from_f64_lossy(2.0);
            if loglik(mid) >= target {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        (inside + outside) / F::from_f64_lossy(2.0)
    };

    let mut lo = r_hat / F::from_f64_lossy(2.0);
    while loglik(lo) >= target && lo > F::from_f64_lossy(1e-12) {
        lo = lo / F::from_f64_lossy(2.0);
    }
    let mut hi = r_hat * F::from_f64_lossy(2.0);
    while loglik(hi) >= target && hi < F::from_f64_lossy(1e12) {
        hi = hi * F::from_f64_lossy(2.0);
    }

    Ok(REstimate {
        method: Method::Ml,
        r: r_hat,
        ci_low: bisect(r_hat, lo),
        ci_high: bisect(r_hat, hi),
        window: (0, counts.len() - 1),
    })
}

/// Numerical floor below which yesterday's count is replaced in the SB
/// likelihood, so zero-count days still update the posterior.
const SB_COUNT_FLOOR: f64 = 0.1;

/// Sequential Bayesian estimator on a discrete R grid.
///
/// The posterior after day t becomes the prior for day t+1. The
/// likelihood models one-day growth at the rate r(R) implied by the
/// generation-time MGF (`1/M(-r) = R`), so the estimator is consistent
/// with the EG mapping and recovers R exactly on steady exponential
/// data.
pub fn estimate_sb<F: Real>(
    s: &IncidenceSeries,
    g: &GenTimeDist<F>,
    grid_max: f64,
    grid_step: f64,
) -> Result<RTrajectory<F>, EstimatorError> {
    if !(grid_max > 1.0) || !(grid_step > 0.0) || grid_step > 0.05 {
        return Err(EstimatorError::BadGrid { grid_max, grid_step });
    }
    if s.counts.len() < 2 {
        return Err(EstimatorError::Degenerate("need at least 2 days".into()));
    }

    let cells = (grid_max / grid_step).round() as usize + 1;
    let grid: Vec<F> = (0..cells)
        .map(|i| F::from_f64_lossy(i as f64 * grid_step))
        .collect();
    // per-cell daily log growth factor r(R); R = 0 maps to -inf growth
    let log_growth: Vec<F> = grid.iter().map(|&r| inverse_mgf_growth(g, r)).collect();

    let n_days = s.counts.len();
    let mut posterior: Vec<F> = vec![F::one() / F::from_usize_lossy(cells); cells];
    let mut r_mean = Vec::with_capacity(n_days - 1);
    let mut r_low = Vec::with_capacity(n_days - 1);
    let mut r_high = Vec::with_capacity(n_days - 1);

    for t in 1..n_days {
        let prev = (s.counts[t - 1] as f64).max(SB_COUNT_FLOOR);
        let obs = F::from_f64_lossy(s.counts[t] as f64);
        let ln_prev = F::from_f64_lossy(prev.ln());

        // log Poisson(N_t; prev * e^{r(R)}) up to N_t!-terms
        let mut log_post: Vec<F> = posterior
            .iter()
            .zip(&log_growth)
            .map(|(&p, &lg)| {
                let ln_lambda = ln_prev + lg;
                let lambda = ln_lambda.exp();
                p.max(F::from_f64_lossy(1e-300)).ln() + obs * ln_lambda - lambda
            })
            .collect();
        let max_lp = log_post.iter().fold(F::neg_infinity(), |m, &v| m.max(v));
        for lp in &mut log_post {
            *lp = (*lp - max_lp).exp();
        }
        let total: F = log_post.iter().copied().sum();
        for (p, w) in posterior.iter_mut().zip(&log_post) {
            *p = *w / total;
        }

        let mean: F = posterior.iter().zip(&grid).map(|(&p, &r)| p * r).sum();
        let (lo, hi) = central_interval(&posterior, &grid, 0.95);
        r_mean.push(mean);
        r_low.push(lo);
        r_high.push(hi);
    }

    Ok(RTrajectory {
        start_date: s.start_date + chrono::Duration::days(1),
        censored: vec![false; r_mean.len()],
        r_mean,
        r_low,
        r_high,
    })
}

/// Solve `1/M(-r) = target_r` for the daily log growth factor r by
/// bisection; M(-r) is strictly decreasing in r.
fn inverse_mgf_growth<F: Real>(g: &GenTimeDist<F>, target_r: F) -> F {
    if !(target_r > F::zero()) {
        return F::from_f64_lossy(-50.0);
    }
    let mut lo = F::from_f64_lossy(-50.0);
    let mut hi = F::from_f64_lossy(50.0);
    for _ in 0..100 {
        let mid = (lo + hi) / F::from_f64_lossy(2.0);
        let m = g.mgf_at(-mid);
        // R implied by mid is 1/m; too small an R means mid is too low
        if m.is_infinite() || F::one() / m < target_r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / F::from_f64_lossy(2.0)
}

fn central_interval<F: Real>(posterior: &[F], grid: &[F], mass: f64) -> (F, F) {
    let tail = F::from_f64_lossy((1.0 - mass) / 2.0);
    let upper = F::one() - tail;
    let mut acc = F::zero();
    let mut lo = grid[0];
    let mut hi = *grid.last().unwrap();
    let mut lo_set = false;
    for (p, &r) in posterior.iter().zip(grid) {
        acc = acc + *p;
        if !lo_set && acc >= tail {
            lo = r;
            lo_set = true;
        }
        if acc >= upper {
            hi = r;
            break;
        }
    }
    (lo, hi)
}

/// Time-dependent (case-reproduction) estimates plus bookkeeping about
/// days whose cases had no possible infector.
#[derive(Debug, Clone)]
pub struct TdOutcome<F> {
    pub trajectory: RTrajectory<F>,
    /// Days with cases but zero infectious pressure; their cases are
    /// excluded from the conservation identity.
    pub no_ancestor_days: Vec<usize>,
}

/// Time-dependent estimator: each day-t cohort's R is the expected
/// number of later cases attributed to it through the relative
/// likelihoods `N_s w(s-t) / D_s`. Interval bands come from multinomial
/// resampling of every case's infector day. The last `k` days are
/// marked censored (incomplete futures, biased low).
pub fn estimate_td<F: Real>(
    s: &IncidenceSeries,
    g: &GenTimeDist<F>,
    n_resamples: usize,
    rng: &mut impl Rng,
) -> Result<TdOutcome<F>, EstimatorError> {
    let counts = &s.counts;
    let n_days = counts.len();
    let k = g.support();
    if n_days <= k {
        return Err(EstimatorError::Degenerate(format!(
            "series length {n_days} must exceed the generation-time support {k}"
        )));
    }

    // D_s: total infectious pressure on day s from earlier cases
    let pressure: Vec<f64> = (0..n_days)
        .map(|t| infection_pressure::<f64>(counts, &to_f64(g), t))
        .collect();

    let mut no_ancestor_days = Vec::new();
    for (t, &d) in pressure.iter().enumerate() {
        if counts[t] > 0 && d == 0.0 {
            no_ancestor_days.push(t);
        }
    }

    // point estimate: R_t = sum_{s>t} N_s w(s-t) / D_s
    let w64: Vec<f64> = g.weights().iter().map(|w| w.as_f64()).collect();
    let point: Vec<f64> = (0..n_days)
        .map(|t| {
            (t + 1..n_days.min(t + k + 1))
                .filter(|&st| pressure[st] > 0.0)
                .map(|st| counts[st] as f64 * w64[st - t - 1] / pressure[st])
                .sum()
        })
        .collect();

    // resampling: assign each day-s case an infector day with
    // probabilities N_u w(s-u) / D_s, via a binomial chain
    let mut replicate_r: Vec<Vec<f64>> = vec![Vec::with_capacity(n_resamples); n_days];
    for _ in 0..n_resamples {
        let mut assigned = vec![0u64; n_days];
        for st in 1..n_days {
            if counts[st] == 0 || pressure[st] <= 0.0 {
                continue;
            }
            let mut remaining = counts[st];
            let mut rem_mass = pressure[st];
            let lo = st.saturating_sub(k);
            for u in lo..st {
                if remaining == 0 {
                    break;
                }
                let mass = counts[u] as f64 * w64[st - u - 1];
                if mass <= 0.0 {
                    continue;
                }
                let p = (mass / rem_mass).clamp(0.0, 1.0);
                let draw = if p >= 1.0 {
                    remaining
                } else {
                    Binomial::new(remaining, p).expect("valid binomial").sample(rng)
                };
                assigned[u] += draw;
                remaining -= draw;
                rem_mass -= mass;
            }
        }
        for t in 0..n_days {
            if counts[t] > 0 {
                replicate_r[t].push(assigned[t] as f64 / counts[t] as f64);
            }
        }
    }

    let mut r_low = Vec::with_capacity(n_days);
    let mut r_high = Vec::with_capacity(n_days);
    for t in 0..n_days {
        if replicate_r[t].is_empty() {
            // zero-count day: the point estimate is the expected R of a
            // hypothetical case, with no resampling spread
            r_low.push(point[t]);
            r_high.push(point[t]);
        } else {
            let mut reps = replicate_r[t].clone();
            reps.sort_by(|a, b| a.partial_cmp(b).unwrap());
            r_low.push(percentile(&reps, 0.025).min(point[t]));
            r_high.push(percentile(&reps, 0.975).max(point[t]));
        }
    }

    let censored: Vec<bool> = (0..n_days).map(|t| t + k >= n_days).collect();
    Ok(TdOutcome {
        trajectory: RTrajectory {
            start_date: s.start_date,
            r_mean: point.iter().map(|&v| F::from_f64_lossy(v)).collect(),
            r_low: r_low.into_iter().map(F::from_f64_lossy).collect(),
            r_high: r_high.into_iter().map(F::from_f64_lossy).collect(),
            censored,
        },
        no_ancestor_days,
    })
}

fn to_f64<F: Real>(g: &GenTimeDist<F>) -> GenTimeDist<f64> {
    // weights are already normalized; rebuild through serde-free path
    GenTimeDist::from_weights_unchecked(
        g.weights().iter().map(|w| w.as_f64()).collect(),
        g.mean_days().as_f64(),
        g.sd_days().as_f64(),
    )
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Case-weighted mean of TD's per-day estimates over non-censored days;
/// the summary used when quoting a single TD number.
///
/// The first `k` days are also excluded: their forward attributions
/// divide by infectious pressures computed from an incomplete history,
/// which biases those estimates high. `k` (the generation-time support)
/// equals the number of tail-censored days.
pub fn td_case_weighted_mean<F: Real>(s: &IncidenceSeries, outcome: &TdOutcome<F>) -> F {
    let traj = &outcome.trajectory;
    let warmup = traj.censored.iter().filter(|&&c| c).count();
    let mut num = F::zero();
    let mut den = F::zero();
    for (t, &r) in traj.r_mean.iter().enumerate() {
        if t >= warmup && !traj.censored[t] && s.counts[t] > 0 {
            let n = F::from_f64_lossy(s.counts[t] as f64);
            num = num + n * r;
            den = den + n;
        }
    }
    if den > F::zero() {
        num / den
    } else {
        F::zero()
    }
}

/// Plain time-average of SB's posterior means; the summary used when
/// quoting a single SB number.
pub fn sb_time_mean<F: Real>(traj: &RTrajectory<F>) -> F {
    let sum: F = traj.r_mean.iter().copied().sum();
    sum / F::from_usize_lossy(traj.r_mean.len().max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gentime::GenTimeDist;
    use approx::assert_abs_diff_eq;
    use chrono::NaiveDate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type Gt = GenTimeDist<f64>;

    fn series(counts: &[u64]) -> IncidenceSeries {
        IncidenceSeries {
            region: "test".into(),
            start_date: NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
            counts: counts.to_vec(),
        }
    }

    #[test]
    fn growth_rate_recovers_exponential() {
        let counts: Vec<u64> = (0..20).map(|t| (10.0 * (0.2 * t as f64).exp()).round() as u64).collect();
        let gr: GrowthRate<f64> = fit_growth_rate(&series(&counts)).unwrap();
        assert!((gr.r - 0.2).abs() < 0.01, "r = {}", gr.r);
        assert!(gr.stderr >= 0.0);
    }

    #[test]
    fn growth_rate_flat_series_is_zero() {
        let gr: GrowthRate<f64> = fit_growth_rate(&series(&[5, 5, 5, 5, 5])).unwrap();
        assert_abs_diff_eq!(gr.r, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn growth_rate_negative_for_decay() {
        let counts: Vec<u64> = (0..12).map(|t| 4096u64 >> t).collect();
        let gr: GrowthRate<f64> = fit_growth_rate(&series(&counts)).unwrap();
        assert!(gr.r < 0.0);
    }

    #[test]
    fn growth_rate_rejects_degenerate() {
        assert!(fit_growth_rate::<f64>(&series(&[1, 2, 3, 4])).is_err());
        assert!(fit_growth_rate::<f64>(&series(&[0, 0, 5, 0, 7])).is_err());
        assert!(fit_growth_rate::<f64>(&series(&[0, 0, 0, 0, 0])).is_err());
    }

    #[test]
    fn eg_flat_series_gives_unity() {
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        let est = estimate_eg(&series(&[7, 7, 7, 7, 7, 7, 7]), &g).unwrap();
        assert_abs_diff_eq!(est.r, 1.0, epsilon = 1e-9);
        assert!(est.ci_low <= est.r && est.r <= est.ci_high);
    }

    #[test]
    fn eg_point_mass_equivalence() {
        // for a point mass at T the EG estimate is exactly e^{rT}
        let counts: Vec<u64> = (0..30).map(|t| (50.0 * (0.1 * t as f64).exp()).round() as u64).collect();
        let s = series(&counts);
        let gr: GrowthRate<f64> = fit_growth_rate(&s).unwrap();
        let g = Gt::point_mass(5).unwrap();
        let est = estimate_eg(&s, &g).unwrap();
        assert!((est.r - (5.0 * gr.r).exp()).abs() <= 1e-12);
    }

    #[test]
    fn eg_closed_form_at_r_tenth() {
        // growth rate 0.1 with point mass 5 maps to e^{0.5}
        let g = Gt::point_mass(5).unwrap();
        let r: f64 = growth_to_r(&g, 0.1);
        assert_abs_diff_eq!(r, 1.648721, epsilon = 1e-6);
    }

    #[test]
    fn ml_exact_doubling_series() {
        let g = Gt::point_mass(1).unwrap();
        let est = estimate_ml(&series(&[1, 2, 4, 8, 16]), &g).unwrap();
        assert_eq!(est.r, 2.0);
        assert!(est.ci_low <= 2.0 && est.ci_high >= 2.0);
    }

    #[test]
    fn ml_constant_series_is_unity() {
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        let est = estimate_ml(&series(&vec![50u64; 90]), &g).unwrap();
        assert_abs_diff_eq!(est.r, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn ml_no_secondary_mass() {
        let g = Gt::point_mass(1).unwrap();
        assert!(matches!(
            estimate_ml(&series(&[0, 0]), &g),
            Err(EstimatorError::NoSecondaryMass) | Err(EstimatorError::Degenerate(_))
        ));
    }

    #[test]
    fn ml_closed_form_matches_grid_search() {
        // independent oracle: direct grid maximization of the Poisson
        // log-likelihood over R in [0.5, 4]
        let g = Gt::discretize_gamma(3.0, 1.5, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let len = 12 + (rng.gen::<u64>() % 8) as usize;
            let counts: Vec<u64> = (0..len).map(|_| 1 + rng.gen::<u64>() % 40).collect();
            let s = series(&counts);
            let est = estimate_ml(&s, &g).unwrap();

            let k = g.support();
            let t_start = if counts.len() > k + 1 { k } else { 1 };
            let loglik = |r: f64| -> f64 {
                (t_start..counts.len())
                    .map(|t| {
                        let lam: f64 = (1..=k.min(t))
                            .map(|j| g.weight_at(j) * counts[t - j] as f64)
                            .sum();
                        if lam <= 0.0 {
                            return 0.0;
                        }
                        let mu = r * lam;
                        -mu + counts[t] as f64 * mu.ln()
                    })
                    .sum()
            };
            let mut best = (0.5, f64::NEG_INFINITY);
            let mut r = 0.5;
            while r <= 4.0 {
                let ll = loglik(r);
                if ll > best.1 {
                    best = (r, ll);
                }
                r += 1e-4;
            }
            assert!(
                (est.r - best.0).abs() <= 2e-4,
                "closed form {} vs grid {}",
                est.r,
                best.0
            );
        }
    }

    #[test]
    fn sb_constant_series_converges_to_unity() {
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        let traj = estimate_sb(&series(&vec![1000u64; 60]), &g, 5.0, 0.01).unwrap();
        let last = *traj.r_mean.last().unwrap();
        assert!((last - 1.0).abs() < 0.05, "posterior mean {last}");
    }

    #[test]
    fn sb_recovers_generating_growth() {
        // data generated from the SB likelihood's own growth model
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        let growth: f64 = inverse_mgf_growth(&g, 1.5);
        let mut counts = vec![200u64];
        for t in 1..70 {
            counts.push((counts[t - 1] as f64 * growth.exp()).round() as u64);
        }
        let traj = estimate_sb(&series(&counts), &g, 5.0, 0.01).unwrap();
        let last = *traj.r_mean.last().unwrap();
        assert!((last - 1.5).abs() < 0.05, "posterior mean {last}");
    }

    #[test]
    fn sb_posterior_bands_ordered() {
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        let traj = estimate_sb(&series(&[3, 5, 9, 14, 22, 40, 61, 90]), &g, 5.0, 0.01).unwrap();
        for t in 0..traj.r_mean.len() {
            assert!(traj.r_low[t] <= traj.r_mean[t] + 1e-9);
            assert!(traj.r_mean[t] <= traj.r_high[t] + 1e-9);
        }
    }

    #[test]
    fn sb_rejects_bad_grid() {
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        assert!(matches!(
            estimate_sb(&series(&[1, 2, 3]), &g, 0.5, 0.01),
            Err(EstimatorError::BadGrid { .. })
        ));
        assert!(matches!(
            estimate_sb(&series(&[1, 2, 3]), &g, 5.0, 0.2),
            Err(EstimatorError::BadGrid { .. })
        ));
    }

    #[test]
    fn td_two_day_hand_oracle() {
        let g = Gt::point_mass(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = estimate_td(&series(&[1, 1]), &g, 200, &mut rng).unwrap();
        assert_eq!(out.trajectory.r_mean, vec![1.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = estimate_td(&series(&[2, 4]), &g, 200, &mut rng).unwrap();
        assert_eq!(out.trajectory.r_mean[0], 2.0);
        assert!(out.no_ancestor_days.contains(&0));
    }

    #[test]
    fn td_conservation() {
        let g = Gt::discretize_gamma(3.0, 1.5, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let len = 15 + (rng.gen::<u64>() % 10) as usize;
            let counts: Vec<u64> = (0..len).map(|_| rng.gen::<u64>() % 30).collect();
            if counts.iter().sum::<u64>() == 0 {
                continue;
            }
            let s = series(&counts);
            let mut td_rng = ChaCha8Rng::seed_from_u64(0);
            let out = match estimate_td::<f64>(&s, &g, 10, &mut td_rng) {
                Ok(o) => o,
                Err(_) => continue,
            };
            let lhs: f64 = out
                .trajectory
                .r_mean
                .iter()
                .enumerate()
                .map(|(t, &r)| counts[t] as f64 * r)
                .sum();
            let k = g.support();
            let attributable: f64 = (0..len)
                .filter(|&t| {
                    counts[t] > 0
                        && (1..=k.min(t)).any(|j| g.weight_at(j) > 0.0 && counts[t - j] > 0)
                })
                .map(|t| counts[t] as f64)
                .sum();
            assert!((lhs - attributable).abs() <= 1e-9, "{lhs} vs {attributable}");
        }
    }

    #[test]
    fn td_deterministic_given_seed() {
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        let counts: Vec<u64> = (0..40).map(|t| 5 + t as u64 * 3).collect();
        let s = series(&counts);
        let a = estimate_td::<f64>(&s, &g, 100, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = estimate_td::<f64>(&s, &g, 100, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.trajectory.r_low, b.trajectory.r_low);
        assert_eq!(a.trajectory.r_high, b.trajectory.r_high);
    }

    #[test]
    fn td_censors_right_edge() {
        let g = Gt::discretize_gamma(5.2, 2.8, 20).unwrap();
        let counts = vec![10u64; 50];
        let out = estimate_td::<f64>(&series(&counts), &g, 10, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let censored: Vec<usize> = out
            .trajectory
            .censored
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(t, _)| t)
            .collect();
        assert_eq!(censored, (30..50).collect::<Vec<_>>());
    }
}
