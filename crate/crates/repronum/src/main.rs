use clap::{Args, Parser, Subcommand, ValueEnum};
use repronum::report::{self, GtSpec, OutputFormat, Report, RunConfig};
use repronum::restimators::Method;
use repronum::simoracle::{simulate_branching, SimConfig};
use repronum::GenTime;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "repronum", version, about = "Reproduction-number estimation from incidence data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate R0/R(t) for one region and emit a report
    Estimate(EstimateArgs),
    /// Generate synthetic incidence from a branching process with known R
    Simulate(SimulateArgs),
    /// Merge reports into a multi-region comparison table
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Sir,
    Eg,
    Ml,
    Sb,
    Td,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Sir => Method::Sir,
            MethodArg::Eg => Method::Eg,
            MethodArg::Ml => Method::Ml,
            MethodArg::Sb => Method::Sb,
            MethodArg::Td => Method::Td,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct GtArgs {
    /// Generation-time mean in days
    #[arg(long = "gt-mean", default_value_t = 5.2)]
    gt_mean: f64,
    /// Generation-time standard deviation in days
    #[arg(long = "gt-sd", default_value_t = 2.8)]
    gt_sd: f64,
    /// Maximum generation-time lag in days
    #[arg(long = "gt-max-lag", default_value_t = 20)]
    gt_max_lag: usize,
}

#[derive(Args)]
struct EstimateArgs {
    /// Cumulative case CSV (date,region,confirmed,recovered,deaths)
    #[arg(long)]
    input: PathBuf,
    /// Region metadata CSV (region,population,tests_per_million);
    /// defaults to regions.csv next to the input
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    region: String,
    /// Comma-separated methods to run
    #[arg(long, value_delimiter = ',', required = true)]
    methods: Vec<MethodArg>,
    #[command(flatten)]
    gt: GtArgs,
    /// First day index of the estimation window
    #[arg(long)]
    begin: Option<usize>,
    /// Last day index of the estimation window (inclusive)
    #[arg(long)]
    end: Option<usize>,
    /// Upper bound of the sequential-Bayesian R grid
    #[arg(long = "grid-max", default_value_t = 5.0)]
    grid_max: f64,
    /// Step of the sequential-Bayesian R grid
    #[arg(long = "grid-step", default_value_t = 0.01)]
    grid_step: f64,
    /// Resampling replicates for the time-dependent interval
    #[arg(long, default_value_t = 1000)]
    resamples: usize,
    #[arg(long = "rng-seed", default_value_t = 0)]
    rng_seed: u64,
    #[arg(long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
    /// Output formats to write
    #[arg(long, value_delimiter = ',', default_values = ["json", "csv"])]
    format: Vec<FormatArg>,
    /// Minimum SIR forecast horizon in days (auto-extends past the peak)
    #[arg(long = "forecast-horizon", default_value_t = 365)]
    forecast_horizon: u32,
}

#[derive(Args)]
struct SimulateArgs {
    /// Ground-truth reproduction number
    #[arg(long)]
    r: f64,
    #[arg(long = "seed-cases", default_value_t = 10)]
    seed_cases: u64,
    #[arg(long, default_value_t = 120)]
    horizon: usize,
    #[arg(long = "rng-seed", default_value_t = 0)]
    rng_seed: u64,
    /// Stop once this many total cases have accumulated
    #[arg(long = "max-cases", default_value_t = u64::MAX)]
    max_cases: u64,
    #[command(flatten)]
    gt: GtArgs,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Report JSON files produced by `estimate`
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Also write the comparison as CSV to this path
    #[arg(long = "out-csv")]
    out_csv: Option<PathBuf>,
}

/// REPRONUM_SEED overrides any --rng-seed on the command line.
fn effective_seed(cli_seed: u64) -> u64 {
    std::env::var("REPRONUM_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(cli_seed)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Estimate(args) => run_estimate(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Compare(args) => run_compare(args),
    }
}

fn run_estimate(args: EstimateArgs) -> ExitCode {
    let meta_path = args.meta.clone().unwrap_or_else(|| {
        args.input
            .parent()
            .unwrap_or_else(|| std::path::Path::new("."))
            .join("regions.csv")
    });
    let window = match (args.begin, args.end) {
        (None, None) => None,
        (b, e) => Some((b.unwrap_or(0), e.unwrap_or(usize::MAX))),
    };
    let cfg = RunConfig {
        input_path: args.input,
        meta_path,
        region: args.region,
        methods: args.methods.iter().map(|&m| m.into()).collect(),
        gt: GtSpec {
            mean: args.gt.gt_mean,
            sd: args.gt.gt_sd,
            max_lag: args.gt.gt_max_lag,
        },
        window,
        grid_max: args.grid_max,
        grid_step: args.grid_step,
        resamples: args.resamples,
        rng_seed: effective_seed(args.rng_seed),
        out_dir: Some(args.out_dir),
        formats: args
            .format
            .iter()
            .map(|f| match f {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            })
            .collect(),
        forecast_horizon_days: args.forecast_horizon,
    };
    match report::run(&cfg) {
        Ok((report, had_errors)) => {
            for est in &report.estimates {
                println!(
                    "{}: R = {:.4} [{:.4}, {:.4}]",
                    est.method, est.r, est.ci[0], est.ci[1]
                );
            }
            if let Some(fc) = &report.forecast {
                println!(
                    "forecast: peak {} | max infected {} | severe {} | icu {} | deaths {}",
                    fc.peak_date, fc.max_infected, fc.severe, fc.icu, fc.deaths
                );
            }
            for w in &report.warnings {
                eprintln!("warning [{}]: {}", w.code, w.message);
            }
            if had_errors {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run_simulate(args: SimulateArgs) -> ExitCode {
    let gt = match GenTime::discretize_gamma(args.gt.gt_mean, args.gt.gt_sd, args.gt.gt_max_lag) {
        Ok(gt) => gt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cfg = SimConfig {
        true_r: args.r,
        gt,
        seed_cases: args.seed_cases,
        horizon_days: args.horizon,
        rng_seed: effective_seed(args.rng_seed),
        max_total_cases: args.max_cases,
    };
    let outcome = match simulate_branching(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut body = String::from("date,region,confirmed,recovered,deaths\n");
    let mut cumulative = 0u64;
    for (t, &n) in outcome.series.counts.iter().enumerate() {
        cumulative += n;
        let date = outcome.series.start_date + chrono::Duration::days(t as i64);
        body.push_str(&format!("{date},simulated,{cumulative},0,0\n"));
    }
    match args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, body) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        None => print!("{body}"),
    }
    ExitCode::SUCCESS
}

fn run_compare(args: CompareArgs) -> ExitCode {
    let mut reports = Vec::new();
    for path in &args.reports {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error reading {}: {e}", path.display());
                return ExitCode::from(2);
            }
        };
        match serde_json::from_str::<Report>(&text) {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error parsing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }
    let cmp = report::compare(&reports);
    print!("{}", cmp.to_text());
    if let Some(path) = args.out_csv {
        if let Err(e) = std::fs::write(&path, cmp.to_csv()) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::SUCCESS
}
