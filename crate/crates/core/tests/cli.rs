use std::path::Path;
use std::process::Command;

use optoent::cli::job::{AxisValue, SweepRecord};
use optoent::cli::output::{write_contour_table, write_line_table};
use optoent::cli::{run, JobConfig, Task};
use optoent::covariance::{IntegratorSettings, Partition, TimeGrid};
use optoent::entanglement::Verdict;

fn optoent(dir: &Path, args: &[&str]) -> (i32, serde_json::Value) {
    let status = Command::new(env!("CARGO_BIN_EXE_optoent"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .status()
        .unwrap();
    let summary = std::fs::read_to_string(dir.join("summary.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or(serde_json::Value::Null);
    (status.code().unwrap(), summary)
}

const SWEEP: &str = r#"
task = "sweep"
partition = "adiabatic"
[system]
preset = "free_mass"
interaction_freq_hz = 100.0
[noise]
kind = "white"
omega_f_hz = 100.0
omega_x_hz = 100.0
[grid]
dt = 1e-3
duration = 1e-2
[sweep]
axes = [{ name = "omega_x_ratio", values = [3.0, 0.5, 1.5] }]
"#;

#[test]
fn self_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, summary) = optoent(dir.path(), &["self-check"]);
    assert_eq!(code, 0);
    assert_eq!(summary["passed"], true);
}

#[test]
fn empty_axis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.toml");
    std::fs::write(&cfg, SWEEP.replace("values = [3.0, 0.5, 1.5]", "values = []")).unwrap();
    let (code, _) = optoent(&dir.path().join("out"), &["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn sweep_writes_sorted_line_table_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("job.toml");
    std::fs::write(&cfg, SWEEP).unwrap();
    let out = dir.path().join("out");
    let (code, summary) = optoent(&out, &["sweep", "--config", cfg.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(code, 0);
    assert_eq!(summary["records"].as_array().unwrap().len(), 3);

    let mut rdr = csv::Reader::from_path(out.join("line.csv")).unwrap();
    let xs: Vec<f64> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(xs, vec![0.5, 1.5, 3.0]);

    let first = std::fs::read_to_string(out.join("records.jsonl")).unwrap();
    let (code, _) = optoent(&out, &["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    // reused records keep their original timing
    assert_eq!(std::fs::read_to_string(out.join("records.jsonl")).unwrap(), first);
}

#[test]
fn covariance_cache_is_populated_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = JobConfig::from_toml_str(SWEEP).unwrap();
    cfg.sweep.cache_covariance = true;
    cfg.out = dir.path().to_path_buf();
    let a = run(&cfg, false).unwrap();
    let cached = std::fs::read_dir(dir.path().join("cache")).unwrap().count();
    // one set and one refinement reference per point, binary plus sidecar
    assert_eq!(cached, 3 * 2 * 2);
    std::fs::remove_file(dir.path().join("records.jsonl")).unwrap();
    let b = run(&cfg, false).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.lambda_n, y.lambda_n);
        assert_eq!(x.verdict, y.verdict);
    }
}

#[test]
fn negativity_summary_carries_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = JobConfig::from_toml_str(SWEEP).unwrap();
    cfg.task = Task::Negativity;
    cfg.out = dir.path().to_path_buf();
    let o = run(&cfg, false).unwrap();
    assert!(!o.failed);
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(s["record"]["lambda_n"].is_number());
    assert_eq!(s["record"]["partition"], "adiabatic");
}

#[test]
fn fit_recovers_a_synthetic_force_budget() {
    let dir = tempfile::tempdir().unwrap();
    let (tau, wf) = (1.6e-20, 2.0 * std::f64::consts::PI * 0.25);
    let mut text = String::from("frequency_hz,psd\n");
    for k in 0..200 {
        let f = 10f64.powf(-2.0 + 4.0 * k as f64 / 199.0);
        let w = 2.0 * std::f64::consts::PI * f;
        text += &format!("{f},{}\n", tau / ((w / wf).powi(14) + 1.0));
    }
    std::fs::write(dir.path().join("psd.csv"), text).unwrap();
    std::fs::write(dir.path().join("job.toml"), "[fit]\ncsv = \"psd.csv\"\ntemplate = \"ligo_force\"\n").unwrap();
    let (code, s) = optoent(&dir.path().join("out"), &["fit", "--config", dir.path().join("job.toml").to_str().unwrap()]);
    assert_eq!(code, 0);
    let p = &s["fit"]["parameters"];
    assert!((p["tau_F"].as_f64().unwrap() / tau - 1.0).abs() < 1e-3);
    assert!((p["omega_F"].as_f64().unwrap() / wf - 1.0).abs() < 1e-3);
}

fn record(index: usize, a1: f64, a2: f64, verdict: Verdict, en: Option<f64>) -> SweepRecord {
    SweepRecord {
        index,
        axes: vec![
            AxisValue { name: "alpha_f1".into(), value: a1 },
            AxisValue { name: "alpha_f2".into(), value: a2 },
        ],
        config_hash: format!("{index}"),
        partition: Partition::CavityTraced,
        grid: TimeGrid { bins: 4, dt: 1e-3 },
        integrator: IntegratorSettings::default(),
        lambda_b: Some(-0.1),
        lambda_n: Some(-0.2),
        eps_num: Some(1e-6),
        nu_min: Some(0.9),
        log_negativity: en,
        verdict: Some(verdict),
        error: None,
        timing_s: 0.0,
    }
}

#[test]
fn contour_rows_mark_undecidable_points_without_values() {
    let dir = tempfile::tempdir().unwrap();
    let recs = vec![
        record(0, 1e-15, 1.0, Verdict::Entangled, Some(0.3)),
        record(1, 1e-15, 10.0, Verdict::Undecidable, None),
        record(2, 1e-10, 1.0, Verdict::Separable, Some(0.0)),
        record(3, 1e-10, 10.0, Verdict::Entangled, Some(0.1)),
    ];
    let path = dir.path().join("contour.csv");
    write_contour_table(&path, &recs).unwrap();
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let h = rdr.headers().unwrap().clone();
    let (en, verdict, flag) = (
        h.iter().position(|c| c == "log_negativity").unwrap(),
        h.iter().position(|c| c == "verdict").unwrap(),
        h.iter().position(|c| c == "undecidable").unwrap(),
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(&rows[1][en], "");
    assert_eq!(&rows[1][verdict], "undecidable");
    assert_eq!(&rows[1][flag], "1");
    assert_eq!(&rows[0][flag], "0");

    let mut shuffled = recs.clone();
    shuffled.reverse();
    let line = dir.path().join("line.csv");
    write_line_table(&line, &shuffled).unwrap();
    let xs: Vec<(f64, f64)> = csv::Reader::from_path(&line)
        .unwrap()
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
}
