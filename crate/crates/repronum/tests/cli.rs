//! End-to-end tests of the command-line interface: the three
//! subcommands, exit codes, and seed-driven determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_repronum")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("REPRONUM_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

#[test]
fn estimate_on_fixtures_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "estimate",
            "--input",
            fixtures().join("subcontinent.csv").to_str().unwrap(),
            "--region",
            "Bangladesh",
            "--methods",
            "eg,ml,sb,td",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for method in ["EG", "ML", "SB", "TD"] {
        assert!(stdout.contains(method), "missing {method} in: {stdout}");
    }

    let report = fs::read_to_string(dir.path().join("Bangladesh_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    let estimates = v["estimates"].as_array().unwrap();
    assert_eq!(estimates.len(), 4);
    for est in estimates {
        assert!(est["r"].is_number());
        assert_eq!(est["ci"].as_array().unwrap().len(), 2);
        assert_eq!(est["window"].as_array().unwrap().len(), 2);
    }

    // trajectory CSVs carry the documented header
    let td_csv = fs::read_to_string(dir.path().join("Bangladesh_td.csv")).unwrap();
    assert!(td_csv.starts_with("date,r_mean,r_low,r_high,censored"));
}

#[test]
fn estimate_is_deterministic_for_a_seed() {
    let read_report = |dir: &Path| {
        fs::read_to_string(dir.join("Bangladesh_report.json")).unwrap()
    };
    let mut reports = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let out = run(
            &[
                "estimate",
                "--input",
                fixtures().join("subcontinent.csv").to_str().unwrap(),
                "--region",
                "Bangladesh",
                "--methods",
                "td",
                "--resamples",
                "100",
                "--rng-seed",
                "5",
                "--out-dir",
                dir.path().to_str().unwrap(),
            ],
            &[],
        );
        assert!(out.status.success());
        reports.push(read_report(dir.path()));
    }
    assert_eq!(reports[0], reports[1], "same seed must give identical reports");
}

#[test]
fn env_seed_overrides_flag() {
    let simulate = |args: &[&str], envs: &[(&str, &str)]| {
        let out = run(args, envs);
        assert!(out.status.success());
        out.stdout
    };
    let base = &[
        "simulate",
        "--r",
        "1.5",
        "--seed-cases",
        "10",
        "--horizon",
        "60",
    ];
    let mut with_flag = base.to_vec();
    with_flag.extend(["--rng-seed", "42"]);
    let flag_out = simulate(&with_flag, &[]);

    let mut other_flag = base.to_vec();
    other_flag.extend(["--rng-seed", "1"]);
    let env_out = simulate(&other_flag, &[("REPRONUM_SEED", "42")]);
    assert_eq!(flag_out, env_out, "REPRONUM_SEED must override --rng-seed");

    let differing = simulate(&other_flag, &[]);
    assert_ne!(flag_out, differing, "different seeds should differ");
}

#[test]
fn simulate_output_round_trips_into_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let sim_csv = dir.path().join("sim.csv");
    let out = run(
        &[
            "simulate",
            "--r",
            "1.4",
            "--seed-cases",
            "20",
            "--horizon",
            "100",
            "--rng-seed",
            "3",
            "--out",
            sim_csv.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());

    fs::write(
        dir.path().join("regions.csv"),
        "region,population,tests_per_million\nsimulated,100000000,1000\n",
    )
    .unwrap();

    let out = run(
        &[
            "estimate",
            "--input",
            sim_csv.to_str().unwrap(),
            "--region",
            "simulated",
            "--methods",
            "eg,ml",
            "--out-dir",
            dir.path().join("out").to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("out/simulated_report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    let eg = v["estimates"][0]["r"].as_f64().unwrap();
    assert!((eg - 1.4).abs() < 0.25, "EG on simulated data: {eg}");
}

#[test]
fn compare_merges_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut report_paths = Vec::new();
    for region in ["Bangladesh", "Pakistan"] {
        let out_dir = dir.path().join(region);
        let out = run(
            &[
                "estimate",
                "--input",
                fixtures().join("subcontinent.csv").to_str().unwrap(),
                "--region",
                region,
                "--methods",
                "eg,ml",
                "--out-dir",
                out_dir.to_str().unwrap(),
            ],
            &[],
        );
        assert!(out.status.success());
        report_paths.push(out_dir.join(format!("{region}_report.json")));
    }

    let csv_path = dir.path().join("comparison.csv");
    let out = run(
        &[
            "compare",
            report_paths[0].to_str().unwrap(),
            report_paths[1].to_str().unwrap(),
            "--out-csv",
            csv_path.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Bangladesh") && stdout.contains("Pakistan"), "{stdout}");

    let csv = fs::read_to_string(csv_path).unwrap();
    assert!(csv.lines().count() >= 3, "one header plus one row per region");
}

#[test]
fn missing_region_fails_with_code_2() {
    let out = run(
        &[
            "estimate",
            "--input",
            fixtures().join("subcontinent.csv").to_str().unwrap(),
            "--region",
            "Atlantis",
            "--methods",
            "eg",
            "--out-dir",
            tempfile::tempdir().unwrap().path().to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}
