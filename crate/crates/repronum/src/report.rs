//! Run orchestration: ingest a region, execute the requested estimation
//! methods, and assemble/emit the report artifacts.

use crate::epidata::{self, IncidenceSeries, RegionMeta};
use crate::gentime::GenTimeDist;
use crate::restimators::{self, Method, RTrajectory};
use crate::sir::{self, SirState};
use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct GtSpec {
    pub mean: f64,
    pub sd: f64,
    pub max_lag: usize,
}

impl Default for GtSpec {
    fn default() -> Self {
        GtSpec {
            mean: 5.2,
            sd: 2.8,
            max_lag: 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub meta_path: PathBuf,
    pub region: String,
    pub methods: Vec<Method>,
    pub gt: GtSpec,
    pub window: Option<(usize, usize)>,
    pub grid_max: f64,
    pub grid_step: f64,
    pub resamples: usize,
    pub rng_seed: u64,
    pub out_dir: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
    pub forecast_horizon_days: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataSummary {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub days: usize,
    pub total_confirmed: u64,
    pub total_deaths: u64,
    pub total_recovered: u64,
    pub population: u64,
    pub tests_per_million: Option<f64>,
}

/// One scalar summary per method, mirroring the multi-method comparison
/// table layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub method: Method,
    pub r: f64,
    pub ci: [f64; 2],
    pub window: [usize; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportWarning {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub region: String,
    pub data: DataSummary,
    pub estimates: Vec<EstimateSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forecast: Option<sir::SirForecast>,
    pub warnings: Vec<ReportWarning>,
    #[serde(skip)]
    pub trajectories: Vec<(Method, RTrajectory<f64>)>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Data(#[from] epidata::DataError),
    #[error(transparent)]
    GenTime(#[from] crate::gentime::GenTimeError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn warn(warnings: &mut Vec<ReportWarning>, code: &str, message: String) {
    warnings.push(ReportWarning {
        code: code.to_string(),
        message,
    });
}

/// Execute every requested method on the windowed series. Method-level
/// failures are recorded as warnings rather than aborting the run; the
/// returned flag is true when any method failed.
pub fn run(cfg: &RunConfig) -> Result<(Report, bool), RunError> {
    let meta = RegionMeta::load(&cfg.meta_path)?;
    let cumulative = epidata::load_cumulative_csv(&cfg.input_path, &cfg.region, &meta)?;
    let (full_series, clamps) = epidata::to_daily_incidence(&cumulative)?;

    let mut warnings = Vec::new();
    for c in &clamps {
        warn(
            &mut warnings,
            "CLAMPED_NEGATIVE_DIFF",
            format!("cumulative count dropped by {} on {}", c.drop, c.date),
        );
    }

    let (series, window) = match cfg.window {
        Some((b, e)) => {
            let e = e.min(full_series.len() - 1);
            (epidata::window(&full_series, b, e)?, (b, e))
        }
        None => (full_series.clone(), (0, full_series.len() - 1)),
    };

    let gt: GenTimeDist<f64> = GenTimeDist::discretize_gamma(cfg.gt.mean, cfg.gt.sd, cfg.gt.max_lag)?;

    let mut estimates = Vec::new();
    let mut trajectories = Vec::new();
    let mut forecast = None;
    let mut had_errors = false;

    for &method in &cfg.methods {
        match method {
            Method::Eg => match restimators::estimate_eg(&series, &gt) {
                Ok(est) => estimates.push(EstimateSummary {
                    method,
                    r: est.r,
                    ci: [est.ci_low, est.ci_high],
                    window: [window.0, window.1],
                }),
                Err(e) => {
                    had_errors = true;
                    warn(&mut warnings, "EG_FAILED", e.to_string());
                }
            },
            Method::Ml => match restimators::estimate_ml(&series, &gt) {
                Ok(est) => estimates.push(EstimateSummary {
                    method,
                    r: est.r,
                    ci: [est.ci_low, est.ci_high],
                    window: [window.0, window.1],
                }),
                Err(e) => {
                    had_errors = true;
                    warn(&mut warnings, "ML_FAILED", e.to_string());
                }
            },
            Method::Sb => match restimators::estimate_sb(&series, &gt, cfg.grid_max, cfg.grid_step) {
                Ok(traj) => {
                    let mean = restimators::sb_time_mean(&traj);
                    let lo = average(&traj.r_low);
                    let hi = average(&traj.r_high);
                    estimates.push(EstimateSummary {
                        method,
                        r: mean,
                        ci: [lo.min(mean), hi.max(mean)],
                        window: [window.0, window.1],
                    });
                    trajectories.push((method, traj));
                }
                Err(e) => {
                    had_errors = true;
                    warn(&mut warnings, "SB_FAILED", e.to_string());
                }
            },
            Method::Td => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
                match restimators::estimate_td(&series, &gt, cfg.resamples, &mut rng) {
                    Ok(out) => {
                        for &day in &out.no_ancestor_days {
                            warn(
                                &mut warnings,
                                "TD_NO_ANCESTORS",
                                format!("day {day} has cases but no possible infector"),
                            );
                        }
                        let mean = restimators::td_case_weighted_mean(&series, &out);
                        let lo = average(&out.trajectory.r_low);
                        let hi = average(&out.trajectory.r_high);
                        estimates.push(EstimateSummary {
                            method,
                            r: mean,
                            ci: [lo.min(mean), hi.max(mean)],
                            window: [window.0, window.1],
                        });
                        trajectories.push((method, out.trajectory));
                    }
                    Err(e) => {
                        had_errors = true;
                        warn(&mut warnings, "TD_FAILED", e.to_string());
                    }
                }
            }
            Method::Sir => match sir::fit::<f64>(&series, cumulative.population, Some(&cumulative.recovered)) {
                Ok(params) => {
                    let r0 = sir::r0(&params);
                    estimates.push(EstimateSummary {
                        method,
                        r: r0,
                        ci: [r0, r0],
                        window: [window.0, window.1],
                    });
                    let n = cumulative.population;
                    let i0 = series.counts[0] as f64 / n as f64;
                    let init = SirState::seeded(i0, 0.0);
                    match sir::forecast(&params, &init, n, series.start_date, cfg.forecast_horizon_days) {
                        Ok(fc) => forecast = Some(fc),
                        Err(e) => {
                            had_errors = true;
                            warn(&mut warnings, "SIR_FORECAST_FAILED", e.to_string());
                        }
                    }
                }
                Err(e) => {
                    had_errors = true;
                    warn(&mut warnings, "SIR_FIT_FAILED", e.to_string());
                }
            },
        }
    }

    let report = Report {
        region: cfg.region.clone(),
        data: DataSummary {
            start_date: full_series.start_date,
            end_date: full_series.end_date(),
            days: full_series.len(),
            total_confirmed: *cumulative.confirmed.last().unwrap(),
            total_deaths: *cumulative.deaths.last().unwrap(),
            total_recovered: *cumulative.recovered.last().unwrap(),
            population: cumulative.population,
            tests_per_million: cumulative.tests_per_million,
        },
        estimates,
        forecast,
        warnings,
        trajectories,
    };

    if let Some(dir) = &cfg.out_dir {
        write_outputs(&report, dir, &cfg.formats, &series)?;
    }
    Ok((report, had_errors))
}

fn average(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn write_outputs(
    report: &Report,
    dir: &Path,
    formats: &[OutputFormat],
    series: &IncidenceSeries,
) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    if formats.contains(&OutputFormat::Json) {
        let path = dir.join(format!("{}_report.json", sanitize(&report.region)));
        let mut f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut f, report)?;
        f.write_all(b"\n")?;
    }
    if formats.contains(&OutputFormat::Csv) {
        for (method, traj) in &report.trajectories {
            let path = dir.join(format!(
                "{}_{}.csv",
                sanitize(&report.region),
                method.to_string().to_lowercase()
            ));
            let mut f = std::fs::File::create(path)?;
            writeln!(f, "date,r_mean,r_low,r_high,censored")?;
            for t in 0..traj.r_mean.len() {
                let date = traj.start_date + chrono::Duration::days(t as i64);
                writeln!(
                    f,
                    "{},{},{},{},{}",
                    date, traj.r_mean[t], traj.r_low[t], traj.r_high[t], traj.censored[t]
                )?;
            }
        }
        let _ = series;
    }
    Ok(())
}

fn sanitize(region: &str) -> String {
    region
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

/// Multi-region, multi-method comparison table.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub methods: Vec<Method>,
    pub rows: Vec<(String, Vec<Option<EstimateSummary>>)>,
}

pub fn compare(reports: &[Report]) -> Comparison {
    let methods = vec![Method::Sir, Method::Eg, Method::Ml, Method::Td, Method::Sb];
    let rows = reports
        .iter()
        .map(|rep| {
            let cells = methods
                .iter()
                .map(|m| rep.estimates.iter().find(|e| e.method == *m).cloned())
                .collect();
            (rep.region.clone(), cells)
        })
        .collect();
    Comparison { methods, rows }
}

impl Comparison {
    fn cell_text(cell: &Option<EstimateSummary>) -> String {
        match cell {
            None => "—".to_string(),
            Some(e) if e.method == Method::Sir => format!("{:.3}", e.r),
            Some(e) => format!("{:.3} [{:.3}, {:.3}]", e.r, e.ci[0], e.ci[1]),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("region");
        for m in &self.methods {
            out.push_str(&format!(",{m}_r,{m}_ci_low,{m}_ci_high"));
        }
        out.push('\n');
        for (region, cells) in &self.rows {
            out.push_str(region);
            for cell in cells {
                match cell {
                    None => out.push_str(",,,"),
                    Some(e) => out.push_str(&format!(",{},{},{}", e.r, e.ci[0], e.ci[1])),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let headers: Vec<String> = std::iter::once("Region".to_string())
            .chain(self.methods.iter().map(|m| m.to_string()))
            .collect();
        let mut grid: Vec<Vec<String>> = vec![headers];
        for (region, cells) in &self.rows {
            let mut row = vec![region.clone()];
            row.extend(cells.iter().map(Self::cell_text));
            grid.push(row);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        grid.iter()
            .map(|row| {
                row.iter()
                    .zip(&widths)
                    .map(|(cell, w)| format!("{cell:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            })
            .collect::<Vec<_>>()
            .join("\n")
            + "\n"
    }
}
