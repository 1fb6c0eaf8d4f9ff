use std::path::Path;
use std::process::{Command, Output};

use tls_core::domain::Segment;
use tls_core::pipeline;
use tls_core::sim::GroundTruth;

fn tls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tls")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = tls(args);
    assert!(
        out.status.success(),
        "tls {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has the error line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// simulate -> benchmark-spot -> featurize -> fit on the default scenario.
fn pipeline_to_models(dir: &Path, seed: &str) {
    let corpus = dir.join("corpus");
    ok(&["simulate", "--preset", "default", "--seed", seed, "--out", p(&corpus)]);
    let spot = dir.join("spot.json");
    ok(&["benchmark-spot", "--observations", p(&corpus.join("spot_observations.csv")), "--out", p(&spot)]);
    let features = dir.join("features.csv");
    ok(&["featurize", "--corpus", p(&corpus), "--spot-model", p(&spot), "--out", p(&features)]);
    ok(&["fit", "--features", p(&features), "--out", p(&dir.join("models"))]);
}

#[test]
fn full_pipeline_runs_and_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_to_models(dir.path(), "11");
    let models = dir.path().join("models");
    for s in Segment::ALL {
        assert!(pipeline::model_file(&models, s).exists(), "{}", s.label());
    }

    let truth = GroundTruth::load(&dir.path().join("corpus/truth.json")).unwrap();
    let loaded = pipeline::load_models(&models).unwrap();
    assert_eq!(loaded.len(), 4);
    let r = pipeline::compare_to_truth(&loaded, &truth.acceptance, 3.0).unwrap();
    assert!(r.coverage >= 0.95, "coverage {}", r.coverage);

    let report = dir.path().join("report");
    let stdout = ok(&["report", "--models", p(&models), "--out", p(&report)]);
    assert!(stdout.contains("asset_soft"));
    for f in tls_core::stickiness::report::REPORT_FILES {
        let text = std::fs::read_to_string(report.join(f)).unwrap();
        assert!(!text.is_empty(), "{f}");
    }
    let curves = std::fs::read_to_string(report.join("curves.csv")).unwrap();
    assert!(curves.starts_with("# schema=stickiness_curve/1"));
}

#[test]
fn reruns_reproduce_outputs_and_leave_inputs_alone() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline_to_models(a.path(), "3");
    let tenders = std::fs::read(a.path().join("corpus/tenders.csv")).unwrap();
    pipeline_to_models(b.path(), "3");
    assert_eq!(tenders, std::fs::read(a.path().join("corpus/tenders.csv")).unwrap());
    for f in ["corpus/tenders.csv", "corpus/metrics.csv", "spot.json", "features.csv", "models/gee_asset_soft.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn constant_half_scores_a_quarter() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_to_models(dir.path(), "5");
    let scores = dir.path().join("scores.json");
    let stdout = ok(&[
        "validate",
        "--features",
        p(&dir.path().join("features.csv")),
        "--constant",
        "0.5",
        "--out",
        p(&scores),
    ]);
    assert!(stdout.contains("test_brier"));
    let v: Vec<pipeline::SegmentValidation> = tls_core::io::read_json(&scores).unwrap();
    assert_eq!(v.len(), 4);
    for s in v {
        assert!((s.test_brier - 0.25).abs() < 1e-12);
        assert!((s.train_brier - 0.25).abs() < 1e-12);
    }
}

#[test]
fn fitted_model_beats_the_base_rate_out_of_sample() {
    let dir = tempfile::tempdir().unwrap();
    pipeline_to_models(dir.path(), "8");
    let scores = dir.path().join("scores.json");
    ok(&["validate", "--features", p(&dir.path().join("features.csv")), "--out", p(&scores)]);
    let v: Vec<pipeline::SegmentValidation> = tls_core::io::read_json(&scores).unwrap();
    for s in v {
        assert!(s.test_brier < s.baseline_brier, "{:?}", s);
    }
}

#[test]
fn published_stickiness_prints_four_summaries() {
    let out = ok(&["stickiness", "--published", "--anchor-soft", "0.8", "--alpha", "0.05"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert_eq!(v[0]["anchor"], 0.8);
}

#[test]
fn unknown_flags_fail_with_json() {
    let e = error_json(&tls(&["fit", "--bogus"]));
    assert_eq!(e["error"], "usage");
    let e = error_json(&tls(&["explode"]));
    assert_eq!(e["error"], "usage");
}

#[test]
fn preset_needs_an_explicit_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = tls(&["simulate", "--preset", "default", "--out", p(dir.path())]);
    assert_eq!(error_json(&out)["error"], "usage");
    let out = tls(&["simulate", "--preset", "nope", "--seed", "1", "--out", p(dir.path())]);
    assert_eq!(error_json(&out)["error"], "config");
}

#[test]
fn schema_violations_name_file_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let obs = dir.path().join("spot.csv");
    std::fs::write(&obs, "origin,dest,month,year,distance,price\nMIDWEST,FLORIDA,13,2016,500,900\n").unwrap();
    let out = tls(&["benchmark-spot", "--observations", p(&obs), "--out", p(&dir.path().join("m.json"))]);
    let e = error_json(&out);
    assert_eq!(e["error"], "schema");
    let msg = e["message"].as_str().unwrap();
    assert!(msg.contains("spot.csv"), "{msg}");
}

#[test]
fn missing_inputs_are_io_errors() {
    let e = error_json(&tls(&["fit", "--features", "/nonexistent/features.csv", "--out", "/tmp/x"]));
    assert_eq!(e["error"], "io");
}
