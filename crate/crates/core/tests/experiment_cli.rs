use std::process::Command;

use barron_lab::experiment::{
    fit_loglog_slope, load_rate_report, median_rows, rate_csv, rate_json, rate_svg, report_from_records,
    run_rate_sweep, to_canonical_json, ExperimentConfig, RateRecord, Target, FLAG_FLOORED, FLAG_INSUFFICIENT,
    RATE_CSV_HEADER,
};

fn tiny_config(m_grid: Vec<usize>, seeds: Vec<u64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::rate_sweep();
    cfg.sweep.m_grid = m_grid;
    cfg.sweep.seeds = seeds;
    cfg.sweep.n_mc = 2000;
    cfg.train.epochs = 4;
    cfg.train.restarts = 1;
    cfg
}

fn record(m: usize, seed: u64, err: Option<f64>) -> RateRecord {
    RateRecord {
        m,
        seed,
        achieved_hinge_risk: err,
        misclass_error: err,
        mc_half_width: err.map(|_| 0.0),
        flags: Vec::new(),
        error: None,
    }
}

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

#[test]
fn slope_fit_examples() {
    let exact: Vec<(f64, f64)> = [10.0, 100.0, 1000.0].iter().map(|&m| (m, 3.0 / m)).collect();
    let f = fit_loglog_slope(&exact).unwrap();
    assert!((f.slope + 1.0).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-12);
    let wobble = [1.01, 0.99, 1.0, 1.01, 0.99];
    let noisy: Vec<(f64, f64)> = [64.0f64, 128.0, 256.0, 512.0, 1024.0]
        .iter()
        .zip(wobble)
        .map(|(&m, w)| (m, 2.0 * m.powf(-0.6) * w))
        .collect();
    let two_point = (noisy[4].1 / noisy[0].1).ln() / (noisy[4].0 / noisy[0].0).ln();
    let fit = fit_loglog_slope(&noisy).unwrap().slope;
    assert!((fit + 0.6).abs() < 0.01 && (two_point + 0.6).abs() < 0.01);
    assert!(fit_loglog_slope(&exact[..1]).is_err());
    assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 1.0), (3.0, 0.0)]).is_err());
}

#[test]
fn medians_need_three_seeds() {
    let mut recs = vec![
        record(8, 0, Some(0.4)),
        record(8, 1, Some(0.1)),
        record(8, 2, Some(0.2)),
    ];
    recs.extend([record(16, 0, Some(0.1)), record(16, 1, None), record(16, 2, Some(0.3))]);
    recs.extend((0..4).map(|s| record(32, s, Some(s as f64))));
    let rows = median_rows(&recs);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].m, rows[0].median_error, rows[0].seeds_used), (8, 0.2, 3));
    assert_eq!((rows[1].m, rows[1].median_error), (32, 1.5));
}

#[test]
fn single_cell_sweep_is_flagged_insufficient() {
    let report = run_rate_sweep(&tiny_config(vec![64], vec![0])).unwrap();
    assert_eq!(report.records.len(), 1);
    assert!(report.medians.is_empty() && report.slope.is_none());
    assert!(report.flags.iter().any(|f| f == FLAG_INSUFFICIENT));
    let csv = rate_csv(&report);
    assert_eq!(csv.lines().next(), Some(RATE_CSV_HEADER));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn constant_target_floors_errors() {
    let mut cfg = tiny_config(vec![32, 64], vec![0, 1, 2]);
    cfg.classifier.target = Target::ConstantOne;
    cfg.train.epochs = 100;
    cfg.train.step_size = 0.05;
    let report = run_rate_sweep(&cfg).unwrap();
    let floor = 1.0 / (2.0 * cfg.sweep.n_mc as f64);
    for r in &report.records {
        assert_eq!(r.misclass_error, Some(floor));
        assert!(r.flags.iter().any(|f| f == FLAG_FLOORED));
    }
    assert!(report.medians.iter().all(|m| m.median_error == floor));
}

#[test]
fn sweep_is_deterministic_and_cells_are_isolated() {
    let small = run_rate_sweep(&tiny_config(vec![32, 64], vec![0, 1])).unwrap();
    let large = run_rate_sweep(&tiny_config(vec![32, 64], vec![0, 1, 5])).unwrap();
    for r in &small.records {
        let twin = large.records.iter().find(|q| q.m == r.m && q.seed == r.seed).unwrap();
        assert_eq!(twin, r);
    }
    let again = run_rate_sweep(&tiny_config(vec![32, 64], vec![0, 1, 5])).unwrap();
    assert_eq!(rate_json(&again).unwrap(), rate_json(&large).unwrap());
    assert_eq!(rate_csv(&again), rate_csv(&large));
    let m32: Vec<_> = large.records.iter().filter(|r| r.m == 32).collect();
    assert_eq!(m32.len(), 3);
}

#[test]
fn report_round_trip_and_self_consistency() {
    let recs: Vec<RateRecord> = [64usize, 128, 256, 512]
        .iter()
        .flat_map(|&m| (0..3).map(move |s| record(m, s, Some(0.5 * (m as f64).powf(-0.4) * (1.0 + 0.01 * s as f64)))))
        .collect();
    let report = report_from_records(&ExperimentConfig::rate_sweep(), recs).unwrap();
    let points: Vec<(f64, f64)> = report.medians.iter().map(|r| (r.m as f64, r.median_error)).collect();
    assert_eq!(report.slope, Some(fit_loglog_slope(&points).unwrap().slope));
    assert!((report.slope.unwrap() + 0.4).abs() < 1e-9);
    assert!(report.decreases_end_to_end());
    assert!(report.slope_in(report.windows.acceptance));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/report.json");
    barron_lab::experiment::write_text(&path, &rate_json(&report).unwrap()).unwrap();
    let back = load_rate_report(&path).unwrap();
    assert_eq!(back, report);
    assert_eq!(to_canonical_json(&back).unwrap(), rate_json(&report).unwrap());
    let svg = rate_svg(&report);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn config_round_trip() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/rate_sweep.toml")).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    assert!(ExperimentConfig::from_toml(&text.replace("n_mc = 100000", "n_mc = 0")).is_err());
    assert!(ExperimentConfig::from_toml(&text.replace("pieces = 1", "pieces = 1\ncolour = 3")).is_err());
}

#[test]
fn cli_calculators() {
    let out = lab().args(["calc", "rates", "--d", "2"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("3/5"));
    let out = lab()
        .args([
            "entropy",
            "solve-eps",
            "--c",
            "1",
            "--alpha",
            "1",
            "--beta",
            "0",
            "--n",
            "8",
        ])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("8,5.000000000000e-1"));
    let out = lab()
        .args(["calc", "nn-entropy", "--delta", "1", "--d", "1", "--w", "1", "--b", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(
        lab().args(["calc", "rates", "--d", "1"]).status().unwrap().code(),
        Some(2)
    );
}

#[test]
fn cli_rate_sweep_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, tiny_config(vec![32, 64], vec![0, 1, 2]).to_toml().unwrap()).unwrap();
    let (csv, json, svg) = (
        dir.path().join("r.csv"),
        dir.path().join("out/r.json"),
        dir.path().join("r.svg"),
    );
    let status = lab()
        .arg("rate-sweep")
        .arg("--config")
        .arg(&cfg_path)
        .arg("--csv")
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .arg("--svg")
        .arg(&svg)
        .status()
        .unwrap();
    assert!(status.success());
    let report = load_rate_report(&json).unwrap();
    assert_eq!(report.records.len(), 6);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), rate_csv(&report));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
}

#[test]
fn cli_identity_suite_and_training() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("id.json");
    let status = lab()
        .args(["identity-suite", "--instances", "4", "--json"])
        .arg(&json)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read_to_string(&json).unwrap().contains("hellinger_identity"));

    let cls = dir.path().join("h.json");
    assert!(lab()
        .args(["classifier", "--seed", "3", "--out"])
        .arg(&cls)
        .status()
        .unwrap()
        .success());
    let net = dir.path().join("net.json");
    let status = lab()
        .args(["train", "--m", "64", "--seed", "1", "--classifier"])
        .arg(&cls)
        .arg("--out")
        .arg(&net)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: barron_lab::erm::TrainedNetDocument = barron_lab::experiment::load_json(&net).unwrap();
    assert_eq!(doc.plan.m, 64);
    assert!(
        lab()
            .args(["rate-sweep", "--config", "/nonexistent.toml"])
            .status()
            .unwrap()
            .code()
            == Some(2)
    );
}
