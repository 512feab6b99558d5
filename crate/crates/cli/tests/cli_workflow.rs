use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tilemil::eval::CvReport;
use tilemil::pipeline::AblationReport;

fn tilemil(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilemil")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tilemil(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const FAST: &[&str] = &["--folds", "2", "--repeats", "1", "--tumor-epochs", "2", "--responder-epochs", "2"];

fn cohort(dir: &Path) {
    ok(
        dir,
        &[
            "synth", "gen", "--out", "c", "--n-patients", "8", "--slide-size", "512", "--responder-fraction", "0.5",
            "--tiles-per-patient", "6", "9", "--seed", "5",
        ],
    );
    ok(dir, &["tile", "--cohort", "c"]);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = tilemil(dir.path(), &["cv", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    fs::write(dir.path().join("bad.json"), r#"{"pipeline": {"tile_sise": 64}}"#).unwrap();
    let out = tilemil(dir.path(), &["cv", "--config", "bad.json", "--cohort", ".", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tile_sise"));

    let out = tilemil(dir.path(), &["cv", "--cohort", "missing", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cv_replays_from_run_json() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d);
    let mut args = vec!["cv", "--cohort", "c", "--out", "a"];
    args.extend(FAST);
    ok(d, &args);
    ok(d, &["cv", "--config", "a/run.json", "--out", "b"]);
    let a = fs::read(d.join("a/report.json")).unwrap();
    assert_eq!(a, fs::read(d.join("b/report.json")).unwrap());
    let report: CvReport = serde_json::from_slice(&a).unwrap();
    assert_eq!((report.n_folds, report.n_repeats, report.n_patients), (2, 1, 8));

    let run: serde_json::Value = serde_json::from_slice(&fs::read(d.join("a/run.json")).unwrap()).unwrap();
    assert_eq!(run["command"], "cv");
    assert_eq!(run["eval"]["seed"], 0);
    assert!(run["paths"]["labels"].as_str().unwrap().ends_with("truth_labels.jsonl"));
}

#[test]
fn train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d);
    ok(d, &["train", "tumor", "--cohort", "c", "--out", "m", "--tumor-epochs", "2"]);
    ok(d, &["train", "responder", "--cohort", "c", "--out", "m", "--responder-epochs", "2"]);
    ok(d, &["predict", "--cohort", "c", "--models", "m", "--out", "p"]);
    let preds = tilemil::pipeline::read_predictions(&d.join("p/predictions.jsonl")).unwrap();
    assert_eq!(preds.len(), 8);

    ok(d, &["eval", "tps", "--cohort", "c", "--out", "t"]);
    assert_eq!(fs::read_to_string(d.join("t/tps.jsonl")).unwrap().lines().count(), 8);
    ok(d, &["eval", "enrich", "--input", "t/tps.jsonl", "--out", "e", "--policy", "full_recall"]);
    let e: tilemil::eval::EnrichmentReport = serde_json::from_slice(&fs::read(d.join("e/enrichment.json")).unwrap()).unwrap();
    assert_eq!(e.false_negatives, 0);

    let out = tilemil(d, &["eval", "enrich", "--input", "p/predictions.jsonl", "--out", "e2", "--threshold", "2"]);
    assert_eq!(out.status.code(), Some(1));

    let tile = &preds[0].tiles[0];
    let addr = format!("{}/{}/{}", tile.slide_id, tile.grid_x, tile.grid_y);
    ok(d, &["heatmap", "--cohort", "c", "--models", "m", "--out", "h", "--tile", &addr]);
    let png = d.join(format!("h/heatmap_{}_{}_{}.png", tile.slide_id, tile.grid_x, tile.grid_y));
    assert_eq!(tilemil::Raster::load_png(&png).unwrap().width(), 128);
}

#[test]
fn features_round_trip_through_cv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d);
    ok(d, &["features", "extract", "--cohort", "c", "--out", "f"]);
    let m = tilemil::stain::read_features(&d.join("f/features.milf")).unwrap();
    assert_eq!(m.d, tilemil::FEATURE_DIM);
    assert_eq!(m.n % 16, 0);

    let rows: String = (0..m.n)
        .map(|i| {
            let r = &m.index[i];
            format!(
                "{{\"slide_id\":\"{}\",\"grid_x\":{},\"grid_y\":{},\"patch_x\":{},\"patch_y\":{},\"values\":{:?}}}\n",
                r.slide_id, r.grid_x, r.grid_y, r.patch_x, r.patch_y, m.row(i)
            )
        })
        .collect();
    fs::write(d.join("rows.jsonl"), rows).unwrap();
    ok(d, &["features", "import", "--input", "rows.jsonl", "--out", "g"]);
    assert_eq!(tilemil::stain::read_features(&d.join("g/features.milf")).unwrap(), m);

    let mut args = vec!["cv", "--cohort", "c", "--features", "g/features.milf", "--out", "k"];
    args.extend(FAST);
    ok(d, &args);
}

#[test]
fn ablation_has_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d);
    let mut args = vec!["ablation", "--cohort", "c", "--out", "ab"];
    args.extend(FAST);
    let table = ok(d, &args);
    let report: AblationReport = serde_json::from_slice(&fs::read(d.join("ab/ablation.json")).unwrap()).unwrap();
    let names: Vec<&str> = report.rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["single_step", "two_step", "two_step_augmented", "tps_baseline"]);
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn exported_labels_feed_training() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d);
    ok(d, &["annotate", "export", "--cohort", "c"]);
    assert_eq!(fs::read_to_string(d.join("c/labels/labels.jsonl")).unwrap(), "");
    // An empty snapshot leaves every tile unlabelled.
    let out = tilemil(d, &["train", "tumor", "--cohort", "c", "--out", "m", "--tumor-epochs", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no tumor label"));
}

#[test]
fn busy_port_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    cohort(d);
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = held.local_addr().unwrap().port().to_string();
    let out = tilemil(d, &["annotate", "serve", "--cohort", "c", "--port", &port]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(&port));
}
