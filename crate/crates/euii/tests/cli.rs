//! Binary contract: exit codes, format identity, manifest behaviour, and
//! the worker environment variable.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use euii::cli::WORKERS_ENV;
use euii::dist::{std_normal_cdf, t_quantile};
use euii::evidence::{dor, euii_fixed};
use euii::gsd::{nominal_levels, Family};
use euii::fixed_design::Sidedness;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_euii"));
    // A clean environment: the worker variable must not leak between tests.
    c.env_remove(WORKERS_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

const TINY_GRID: &str = r#"[
  {"n_max_per_group": 12, "delta": 0.0,
   "variant": {"method": "pocock", "futility": "none"}},
  {"n_max_per_group": 12, "delta": 0.8,
   "variant": {"method": "pocock", "futility": "none"}}
]"#;

#[test]
fn csv_and_json_report_identical_numbers() {
    let json_out = run(&[
        "euii", "--alpha", "0.05", "--power", "0.8", "--delta", "0.5", "--format", "json",
    ]);
    assert!(json_out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&json_out)).unwrap();

    let csv_out = run(&[
        "euii", "--alpha", "0.05", "--power", "0.8", "--delta", "0.5", "--format", "csv",
    ]);
    assert!(csv_out.status.success());
    let text = stdout_str(&csv_out);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let cells: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), cells.len());

    for (name, cell) in header.iter().zip(&cells) {
        let jv = v.get(*name).unwrap_or_else(|| panic!("field {name} in JSON"));
        match jv {
            serde_json::Value::Number(num) => {
                let from_json = num.as_f64().unwrap();
                let from_csv: f64 = cell.parse().unwrap();
                assert_eq!(
                    from_csv.to_bits(),
                    from_json.to_bits(),
                    "field {name}: CSV {cell} vs JSON {from_json}"
                );
            }
            serde_json::Value::String(s) => assert_eq!(s, cell),
            other => panic!("unexpected JSON type for {name}: {other}"),
        }
    }
}

#[test]
fn report_numbers_match_library_calls_bit_for_bit() {
    let out = run(&["euii", "--alpha", "0.05", "--power", "0.8", "--delta", "0.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    // The JSON must carry the library's numbers without reformatting loss.
    let d = dor(0.8, 0.05).unwrap();
    assert_eq!(v["dor"].as_f64().unwrap().to_bits(), d.to_bits());
    let n = v["n"].as_f64().unwrap();
    assert_eq!(
        v["euii"].as_f64().unwrap().to_bits(),
        euii_fixed(d, n).unwrap().to_bits()
    );
}

#[test]
fn usage_errors_exit_two() {
    // Unknown flag.
    let out = run(&["euii", "--alpha", "0.05", "--nope", "1"]);
    assert_eq!(out.status.code(), Some(2));
    // Overdetermined design: both --n and --power.
    let out = run(&["euii", "--delta", "0.5", "--power", "0.8", "--n", "30"]);
    assert_eq!(out.status.code(), Some(2));
    // Replay conflicts with explicit parameters.
    let out = run(&["simulate", "--replay", "m.json", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_two_with_message() {
    let out = run(&["euii", "--alpha", "1.5", "--power", "0.8", "--delta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).starts_with("error:"), "stderr: {}", stderr_str(&out));
    // Underdetermined: neither --power/--beta nor --n.
    let out = run(&["euii", "--delta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_and_degenerate_data_exit_three() {
    let out = run(&["reanalyze", "--data", "/nonexistent/file.csv", "--reps", "200"]);
    assert_eq!(out.status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,n_control,n_treatment,effect\nx1,1,1,0.5\nx2,abc,3,0.1\n").unwrap();
    let out = run(&[
        "reanalyze", "--data", bad.to_str().unwrap(), "--reps", "200",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr_str(&out).contains("zero valid rows"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn simulate_emits_manifest_and_data_files() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(&grid, TINY_GRID).unwrap();
    let out_dir = dir.path().join("run");

    let out = run(&[
        "simulate", "--grid", grid.to_str().unwrap(), "--reps", "1500", "--seed", "42",
        "--workers", "1", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));

    for name in ["conditions.csv", "euii.csv", "manifest.json"] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["reps"], 1500);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["params"]["kind"], "simulate");
    assert_eq!(manifest["params"]["grid"].as_array().unwrap().len(), 2);

    // The conditions table has a header plus one row per condition.
    let table = fs::read_to_string(out_dir.join("conditions.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.starts_with("n_max_per_group,delta,variant,rejection_rate"));

    // Replaying the manifest into a fresh directory reproduces the data
    // files byte for byte (the manifest differs only in duration).
    let replay_dir = dir.path().join("replay");
    let out = run(&[
        "simulate", "--replay", out_dir.join("manifest.json").to_str().unwrap(),
        "--out", replay_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    for name in ["conditions.csv", "euii.csv"] {
        assert_eq!(
            fs::read(out_dir.join(name)).unwrap(),
            fs::read(replay_dir.join(name)).unwrap(),
            "{name} differs under replay"
        );
    }
}

#[test]
fn workers_env_sets_the_default_and_cannot_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    fs::write(&grid, TINY_GRID).unwrap();

    let run_with = |out_name: &str, env: Option<&str>| -> (serde_json::Value, Vec<u8>) {
        let out_dir = dir.path().join(out_name);
        let mut c = bin();
        c.args([
            "simulate", "--grid", grid.to_str().unwrap(), "--reps", "1200", "--seed", "9",
            "--out", out_dir.to_str().unwrap(),
        ]);
        if let Some(v) = env {
            c.env(WORKERS_ENV, v);
        }
        let out = c.output().unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let manifest =
            serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap())
                .unwrap();
        (manifest, fs::read(out_dir.join("conditions.csv")).unwrap())
    };

    let (m1, data1) = run_with("w1", None);
    let (m3, data3) = run_with("w3", Some("3"));
    assert_eq!(m1["workers"], 1, "default worker count is 1");
    assert_eq!(m3["workers"], 3, "the environment variable sets the default");
    assert_eq!(data1, data3, "worker count must not change any output byte");
}

#[test]
fn hidden_dist_subcommand_evaluates_library_functions() {
    // Hidden: absent from help, but fully functional.
    let help = run(&["--help"]);
    assert!(help.status.success());
    assert!(!stdout_str(&help).contains("dist"), "dist must stay out of help");

    let out = run(&["dist", "--op", "std-normal-cdf", "--x", "1.96"]);
    assert!(out.status.success());
    let printed: f64 = stdout_str(&out).trim().parse().unwrap();
    assert_eq!(printed.to_bits(), std_normal_cdf(1.96).unwrap().to_bits());

    let out = run(&["dist", "--op", "t-quantile", "--p", "0.975", "--df", "14"]);
    let printed: f64 = stdout_str(&out).trim().parse().unwrap();
    assert_eq!(printed.to_bits(), t_quantile(0.975, 14.0).unwrap().to_bits());

    // Missing required argument for the op is a domain error.
    let out = run(&["dist", "--op", "t-quantile", "--df", "14"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gsd_json_reports_the_solved_boundaries() {
    let out = run(&[
        "gsd", "--family", "pocock", "--looks", "4", "--alpha", "0.05",
        "--sidedness", "two", "--format", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_str(&out)).unwrap();
    assert_eq!(v["family"], "pocock");
    assert_eq!(v["looks"], 4);
    let level = v["nominal_levels"][0].as_f64().unwrap();
    let expected = nominal_levels(Family::Pocock, 4, 0.05, Sidedness::Two).unwrap()[0];
    assert_eq!(level.to_bits(), expected.to_bits());
    let t1e = v["overall_t1e"].as_f64().unwrap();
    assert!((t1e - 0.05).abs() <= 1e-8);
}
