use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tilemil::annotation::{export_labels, read_log, LOG_FILE};
use tilemil::pipeline::{load_slides, make_tumor_bags, tile_cohort, FeatureCache, PipelineConfig, PixelFeaturizer, PatientTiles};
use tilemil::slide::read_cohort;
use tilemil::stain::{FeatureConfig, FeatureExtractor};
use tilemil::synth::{generate_cohort, SynthConfig};
use tilemil::SlideImage;
use tilemil_cli::service::{open_log, router, AppState};
use tower::ServiceExt;

struct Fixture {
    dir: tempfile::TempDir,
    patients: Vec<PatientTiles>,
    slides: Vec<SlideImage>,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig { n_patients: 2, responder_fraction: 0.5, slide_size: 512, tiles_per_patient_range: [4, 6], ..Default::default() };
    generate_cohort(&synth, dir.path()).unwrap();
    let m = read_cohort(dir.path()).unwrap();
    let slides = load_slides(dir.path(), &m).unwrap();
    let patients = tile_cohort(&m, &slides, &PipelineConfig::default()).unwrap();
    Fixture { dir, patients, slides }
}

fn app(f: &Fixture) -> Router {
    let log = open_log(&f.dir.path().join(LOG_FILE)).unwrap();
    router(Arc::new(AppState::new(&f.patients, f.slides.clone(), log)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn n_tiles(f: &Fixture) -> usize {
    f.patients.iter().map(|p| p.tiles.len()).sum()
}

fn label_body(f: &Fixture, i: usize, label: &str, who: &str) -> Value {
    let t = f.patients.iter().flat_map(|p| &p.tiles).nth(i).unwrap();
    json!({"slide": t.slide_id, "x": t.grid_x, "y": t.grid_y, "label": label, "annotator": who})
}

#[tokio::test]
async fn progress_label_undo() {
    let f = fixture();
    let app = app(&f);
    let total = n_tiles(&f);
    let (s, p) = json_call(&app, "GET", "/api/progress", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(p, json!({"labeled": 0, "total": total}));

    let (s, r) = json_call(&app, "POST", "/api/label", Some(label_body(&f, 0, "tumor", "ann"))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["labeled"], 1);
    let (_, p) = json_call(&app, "GET", "/api/progress", None).await;
    assert_eq!(p["labeled"], 1);

    // Relabelling the same tile does not double count.
    json_call(&app, "POST", "/api/label", Some(label_body(&f, 0, "non_tumor", "ann"))).await;
    let (_, page) = json_call(&app, "GET", "/api/tiles?status=labeled", None).await;
    assert_eq!(page["total"], 1);
    assert_eq!(page["tiles"][0]["label"], "non_tumor");

    let (s, u) = json_call(&app, "POST", "/api/undo", Some(json!({"annotator": "ann"}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(u["undone"]["label"], "non_tumor");
    let (_, page) = json_call(&app, "GET", "/api/tiles?status=labeled", None).await;
    assert_eq!(page["tiles"][0]["label"], "tumor");
    json_call(&app, "POST", "/api/undo", Some(json!({"annotator": "ann"}))).await;
    let (s, e) = json_call(&app, "POST", "/api/undo", Some(json!({"annotator": "ann"}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["error"], "nothing_to_undo");
    let (_, p) = json_call(&app, "GET", "/api/progress", None).await;
    assert_eq!(p["labeled"], 0);
}

#[tokio::test]
async fn errors_are_json() {
    let f = fixture();
    let app = app(&f);
    let (s, e) = json_call(&app, "POST", "/api/label", Some(json!({"slide": "nope", "x": 0, "y": 0, "label": "tumor", "annotator": "a"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(e["error"], "unknown_tile");
    assert!(e["message"].is_string());

    let (s, e) = json_call(&app, "POST", "/api/label", Some(json!({"slide": "x"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["error"], "bad_request");

    let (s, _) = json_call(&app, "GET", "/api/tiles?status=maybe", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, e) = json_call(&app, "GET", "/api/tiles?slide=ghost", None).await;
    assert_eq!((s, e["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_slide")));
    let (s, _) = json_call(&app, "GET", "/api/tile/ghost/0/0/image.png", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = json_call(&app, "GET", "/api/nothing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cohort_pages_and_images() {
    let f = fixture();
    let app = app(&f);
    let (_, c) = json_call(&app, "GET", "/api/cohort", None).await;
    assert_eq!(c["n_patients"], 2);
    assert_eq!(c["n_tiles"], n_tiles(&f));

    let slide = &f.patients[0].tiles[0].slide_id;
    let (_, page) = json_call(&app, "GET", &format!("/api/tiles?slide={slide}&status=unlabeled&page=1"), None).await;
    assert_eq!(page["page_size"], 50);
    assert_eq!(page["total"], f.patients[0].tiles.len());
    let (_, empty) = json_call(&app, "GET", "/api/tiles?status=labeled", None).await;
    assert_eq!((empty["total"].as_u64(), empty["n_pages"].as_u64()), (Some(0), Some(0)));

    let url = page["tiles"][0]["image"].as_str().unwrap().to_string();
    let (s, png) = call(&app, "GET", &url, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(&png[1..4], b"PNG");
    let (_, again) = call(&app, "GET", &url, None).await;
    assert_eq!(png, again);

    let (s, html) = call(&app, "GET", "/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8_lossy(&html).contains("/api"));
}

#[tokio::test]
async fn concurrent_labels_serialize_and_replay() {
    let f = fixture();
    let app = app(&f);
    let total = n_tiles(&f);
    let calls = (0..total).map(|i| {
        let app = app.clone();
        let body = label_body(&f, i, if i % 2 == 0 { "tumor" } else { "non_tumor" }, "ann");
        tokio::spawn(async move { call(&app, "POST", "/api/label", Some(body)).await.0 })
    });
    for h in calls.collect::<Vec<_>>() {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    let log_path = f.dir.path().join(LOG_FILE);
    let entries = read_log(&log_path).unwrap();
    assert_eq!(entries.len(), total);
    assert_eq!(std::fs::read_to_string(&log_path).unwrap().lines().count(), total);

    // Restart: state rebuilt from the log.
    let restarted = self::app(&f);
    let (_, p) = json_call(&restarted, "GET", "/api/progress", None).await;
    assert_eq!(p, json!({"labeled": total, "total": total}));

    let labels = export_labels(&entries).unwrap();
    let mut labelled = f.patients.clone();
    tilemil::pipeline::apply_labels(&mut labelled, &labels);
    let fx = FeatureExtractor::new(FeatureConfig::default()).unwrap();
    let mut cache = FeatureCache::new(Box::new(PixelFeaturizer::new(f.slides.clone(), fx)));
    let bags = make_tumor_bags(&labelled, Default::default(), &mut cache).unwrap();
    assert_eq!(bags.len(), total);
}

#[test]
fn log_path_must_be_writable() {
    assert!(open_log(Path::new("/nonexistent-dir/labels.log.jsonl")).is_err());
}
