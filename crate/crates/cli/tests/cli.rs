use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

use mglyph_core::exchange::GlyphArchive;
use mglyph_core::metrics::{parse_score_json, GlyphScore};
use mglyph_core::staircase::Answer;
use mglyph_core::store::{records_to_jsonl, TrialRecord};
use mglyph_service::{Feedback, GlyphSummary, NextTrial, SessionResults, SessionSummary};
use serde_json::json;

fn mglyph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mglyph"))
        .args(args)
        .env_remove("MGLYPH_DATA_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn export_small(dir: &Path, glyph: &str, samples: usize) -> std::path::PathBuf {
    let out = dir.join(format!("{glyph}.mglyph"));
    let n = samples.to_string();
    let o = mglyph(&[
        "export", "--glyph", glyph, "--samples", &n, "--ppi", "10", "--out", p(&out),
        "--creation-time", "2025-03-01 12:00:00.000000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn gallery_lists_designs() {
    let o = mglyph(&["gallery"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["line", "halton-dots", "shepard-circle", "three-handed-clock"] {
        assert!(text.contains(name), "{name} missing");
    }
    assert!(text.contains("ineligible"));
}

#[test]
fn export_minimal_archive() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("line.mglyph");
    let o = mglyph(&["export", "--glyph", "line", "--samples", "2", "--ppi", "20", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("2 samples, 20x20 px"), "{}", stdout(&o));
    let archive = GlyphArchive::read_from(&out).unwrap();
    let files: Vec<_> = archive.manifest().images.iter().map(|i| i.filename.as_str()).collect();
    assert_eq!(files, ["00000.png", "00001.png"]);
    assert_eq!(archive.xvalues(), [0.0, 100.0]);
}

#[test]
fn export_metadata_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.mglyph");
    let o = mglyph(&[
        "export", "--glyph", "circle", "--samples", "3", "--ppi", "8", "--out", p(&out),
        "--name", "Round", "--short-name", "rnd", "--author", "A. Person",
        "--email", "a@example.org", "--glyph-version", "2.1",
        "--creation-time", "2024-05-06 07:08:09.000010",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = GlyphArchive::read_from(&out).unwrap().manifest().clone();
    assert_eq!((m.name.as_str(), m.short_name.as_str()), ("Round", "rnd"));
    assert_eq!((m.author.as_str(), m.email.as_str(), m.version.as_str()), ("A. Person", "a@example.org", "2.1"));
    assert_eq!(m.creation_time, "2024-05-06 07:08:09.000010");
}

#[test]
fn export_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.mglyph");
    let o = mglyph(&["export", "--glyph", "nosuch", "--samples", "2", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line") && stderr(&o).contains("halton-dots"));

    let blocker = dir.path().join("plain-file");
    std::fs::write(&blocker, "").unwrap();
    let bad = blocker.join("x.mglyph");
    let o = mglyph(&["export", "--glyph", "line", "--samples", "2", "--ppi", "8", "--out", p(&bad)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let o = mglyph(&["export", "--glyph", "line", "--samples", "2", "--out", p(&out), "--creation-time", "yesterday"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_fresh_archive() {
    let dir = tempfile::tempdir().unwrap();
    let path = export_small(dir.path(), "star", 11);
    let o = mglyph(&["validate", p(&path)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}

fn write_zip(path: &Path, manifest: &serde_json::Value, files: &[(&str, &[u8])]) {
    use zip::write::SimpleFileOptions;
    let mut w = zip::ZipWriter::new(std::fs::File::create(path).unwrap());
    w.start_file("info.json", SimpleFileOptions::default()).unwrap();
    w.write_all(manifest.to_string().as_bytes()).unwrap();
    for (name, bytes) in files {
        w.start_file(*name, SimpleFileOptions::default()).unwrap();
        w.write_all(bytes).unwrap();
    }
    w.finish().unwrap();
}

fn manifest(images: serde_json::Value) -> serde_json::Value {
    json!({
        "name": "n", "short-name": "s", "author": "a", "e-mail": "e@x", "version": "1",
        "creation-time": "2025-01-01 00:00:00.000000", "images": images,
    })
}

#[test]
fn validate_names_failures() {
    let dir = tempfile::tempdir().unwrap();
    let src = GlyphArchive::read_from(&export_small(dir.path(), "line", 2)).unwrap();
    let png = src.sample(0).unwrap().2.to_vec();

    let missing = dir.path().join("missing.mglyph");
    write_zip(
        &missing,
        &manifest(json!([[0.0, "00000.png"], [100.0, "00001.png"]])),
        &[("00000.png", &png)],
    );
    let o = mglyph(&["validate", p(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL referenced files present"), "{}", stdout(&o));

    let dup = dir.path().join("dup.mglyph");
    write_zip(
        &dup,
        &manifest(json!([[50.0, "00000.png"], [50.0, "00001.png"]])),
        &[("00000.png", &png), ("00001.png", &png)],
    );
    let o = mglyph(&["validate", p(&dup)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL x strictly increasing"), "{}", stdout(&o));

    let o = mglyph(&["validate", p(&dir.path().join("absent.mglyph"))]);
    assert_eq!(o.status.code(), Some(3));
}

fn accuracy_line(text: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix("accuracy: "))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn simulate_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mglyph(&["simulate", "--glyphs", "line,circle", "--observer", "perfect", "--trials", "40", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(accuracy_line(&stdout(&o)), 1.0);
    assert!(stdout(&o).contains("line: R = ") && stdout(&o).contains("circle: R = "));
    for f in ["records.jsonl", "scores.json", "meta.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn simulate_random_is_at_chance() {
    let dir = tempfile::tempdir().unwrap();
    let o = mglyph(&[
        "simulate", "--glyphs", "square", "--observer", "random", "--trials", "10000", "--seed", "3",
        "--out", p(dir.path()),
    ]);
    assert!(o.status.success());
    let acc = accuracy_line(&stdout(&o));
    assert!((acc - 1.0 / 3.0).abs() <= 0.02, "{acc}");
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = mglyph(&["simulate", "--glyphs", "line,star", "--seed", seed, "--trials", "60", "--out", p(&out)]);
        assert!(o.status.success());
        ["records.jsonl", "scores.json", "meta.json"].map(|f| std::fs::read(out.join(f)).unwrap())
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a[0], run("c", "6")[0]);
}

#[test]
fn simulate_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    for args in [
        &["--observer", "psychic"][..],
        &["--sigma", "-1"],
        &["--gamma", "1.5"],
        &["--d0", "0"],
        &["--trials", "0"],
    ] {
        let mut all = vec!["simulate", "--glyphs", "line", "--out", out];
        all.extend_from_slice(args);
        assert_eq!(mglyph(&all).status.code(), Some(2), "{args:?}");
    }
    let o = mglyph(&["simulate", "--glyphs", "line,nosuch", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let o = mglyph(&["simulate", "--glyphs", "line,line", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_on_archives_snaps_to_grid() {
    let dir = tempfile::tempdir().unwrap();
    let archive = export_small(dir.path(), "circle", 101);
    let out = dir.path().join("run");
    let o = mglyph(&["simulate", "--glyphs", &format!("{},line", p(&archive)), "--trials", "50", "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    // a 1.0 grid caps the level where d0·γ^t drops below 2
    assert_eq!(meta["session"]["config"]["t_max"], 6);
    let records = mglyph_core::store::records_from_jsonl(&std::fs::read_to_string(out.join("records.jsonl")).unwrap()).unwrap();
    for r in records.iter().filter(|r| r.glyph_id == "circle") {
        assert_eq!(r.x1, r.x1.round());
        assert_eq!(r.x2, r.x2.round());
    }
}

#[test]
fn scores_json_round_trips_and_matches_score() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mglyph(&["simulate", "--glyphs", "line,clock", "--seed", "11", "--out", p(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out.join("scores.json")).unwrap();
    let scores: Vec<GlyphScore> = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_string_pretty(&scores).unwrap() + "\n", text);
    let records = out.join("records.jsonl");
    for s in &scores {
        let o = mglyph(&["score", "--records", p(&records), "--glyph", &s.glyph_id, "--format", "json"]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert_eq!(&parse_score_json(&stdout(&o)).unwrap(), s);
    }
    let csv = dir.path().join("clock.csv");
    let o = mglyph(&["score", "--records", p(&records), "--glyph", "clock", "--out", p(&csv)]);
    assert!(o.status.success());
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("t,d,n,accuracy,ci_low,ci_high\n"));
}

fn summary_row(csv: &str) -> Vec<f64> {
    let mut lines = csv.lines().skip_while(|l| *l != "auc,resolution,jnd_distance,jnd_crossing_d");
    lines.next().unwrap();
    lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| if v.is_empty() { f64::NAN } else { v.parse().unwrap() })
        .collect()
}

#[test]
fn score_empty_records() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.jsonl");
    std::fs::write(&records, "").unwrap();
    let o = mglyph(&["score", "--records", p(&records), "--glyph", "g"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let row = summary_row(&stdout(&o));
    assert!((row[0] - 5f64.log2()).abs() < 1e-12);
    assert!((row[1] - 5.0).abs() < 1e-12);
    let o = mglyph(&["score", "--records", p(&records), "--glyph", "g", "--d0", "25"]);
    assert!((summary_row(&stdout(&o))[1] - 4.0).abs() < 1e-12);
}

fn record(t: u32, seq: u64, correct: bool) -> TrialRecord {
    let d = 20.0 * 0.7f64.powi(t as i32);
    TrialRecord {
        session_id: "fx".into(),
        glyph_id: "g".into(),
        sequence_number: seq,
        t,
        d,
        c: 50.0,
        x1: 50.0 + d / 2.0,
        x2: 50.0 - d / 2.0,
        is_equal: false,
        presented_at: "2000-01-01 00:00:00.000000".into(),
        answer: if correct { Answer::LeftGreater } else { Answer::RightGreater },
        correct,
        response_ms: None,
    }
}

#[test]
fn score_two_point_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("records.jsonl");
    let recs = vec![
        record(0, 1, true),
        record(0, 2, true),
        record(1, 3, true),
        record(1, 4, false),
        record(1, 5, true),
    ];
    std::fs::write(&records, records_to_jsonl(&recs)).unwrap();
    let o = mglyph(&["score", "--records", p(&records), "--glyph", "g"]);
    assert!(o.status.success());
    let row = summary_row(&stdout(&o));
    assert!((row[0] - 2.92226).abs() < 1e-4, "{row:?}");
    assert!((row[1] - 7.581).abs() < 1e-3);
    assert!((row[2] - 13.19).abs() < 1e-2);
}

#[test]
fn score_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = mglyph(&["score", "--records", p(&dir.path().join("nope.jsonl")), "--glyph", "g"]);
    assert_eq!(o.status.code(), Some(3));
    let junk = dir.path().join("junk.jsonl");
    std::fs::write(&junk, "{not json\n").unwrap();
    assert_eq!(mglyph(&["score", "--records", p(&junk), "--glyph", "g"]).status.code(), Some(3));
    std::fs::write(&junk, "").unwrap();
    assert_eq!(
        mglyph(&["score", "--records", p(&junk), "--glyph", "g", "--format", "xml"]).status.code(),
        Some(2)
    );
}

struct Served {
    child: Child,
    base: String,
    stderr: std::process::ChildStderr,
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Starts `serve` on an ephemeral port; the data dir comes from the environment.
fn serve(data_dir: &Path, extra: &[&str]) -> Served {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mglyph"))
        .args(["serve", "--listen", "127.0.0.1:0", "--seed", "1"])
        .args(extra)
        .env("MGLYPH_DATA_DIR", data_dir)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("{line:?}")).to_string();
    let stderr = child.stderr.take().unwrap();
    Served { child, base, stderr }
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap()
}

#[test]
fn serve_fresh_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let s = serve(dir.path(), &[]);
    let glyphs: Vec<GlyphSummary> = runtime().block_on(async {
        reqwest::get(format!("{}/glyphs", s.base)).await.unwrap().json().await.unwrap()
    });
    assert!(glyphs.is_empty());
}

#[test]
fn serve_static_and_degraded_mode() {
    let dir = tempfile::tempdir().unwrap();
    let assets = dir.path().join("web");
    std::fs::create_dir(&assets).unwrap();
    std::fs::write(assets.join("index.html"), "<!doctype html><title>mglyph</title>").unwrap();
    let s = serve(&dir.path().join("data"), &["--static", p(&assets)]);
    let rt = runtime();
    let page = rt.block_on(async { reqwest::get(format!("{}/", s.base)).await.unwrap().text().await.unwrap() });
    assert!(page.contains("<title>mglyph</title>"));
    drop(s);

    let mut s = serve(&dir.path().join("data2"), &["--static", p(&dir.path().join("nowhere"))]);
    let status = rt.block_on(async { reqwest::get(format!("{}/glyphs", s.base)).await.unwrap().status() });
    assert_eq!(status, 200);
    let _ = s.child.kill();
    let _ = s.child.wait();
    let mut err = String::new();
    std::io::Read::read_to_string(&mut s.stderr, &mut err).unwrap();
    assert!(err.contains("warning") && err.contains("nowhere"), "{err}");
}

#[test]
fn serve_busy_port_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = Command::new(env!("CARGO_BIN_EXE_mglyph"))
        .args(["serve", "--data-dir", p(dir.path()), "--listen", &addr])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn serve_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(export_small(dir.path(), "line", 101)).unwrap();
    let b = std::fs::read(export_small(dir.path(), "clock", 101)).unwrap();
    let s = serve(&dir.path().join("data"), &[]);
    let base = s.base.clone();
    runtime().block_on(async move {
        let http = reqwest::Client::new();
        let mut ids = Vec::new();
        for bytes in [a, b] {
            let r = http.post(format!("{base}/glyphs")).body(bytes).send().await.unwrap();
            assert_eq!(r.status(), 201);
            ids.push(r.json::<GlyphSummary>().await.unwrap().id);
        }
        let r = http
            .post(format!("{base}/sessions"))
            .json(&json!({"glyphs": ids, "config": {"trials_per_glyph": 15}}))
            .send()
            .await
            .unwrap();
        assert_eq!(r.status(), 201);
        let session: SessionSummary = r.json().await.unwrap();
        let sid = session.session_id;
        let mut answered = 0;
        loop {
            let next: NextTrial = http.get(format!("{base}/sessions/{sid}/next")).send().await.unwrap().json().await.unwrap();
            let token = match next {
                NextTrial::Trial { trial_token, left_image_url, .. } => {
                    let img = http.get(format!("{base}{left_image_url}")).send().await.unwrap();
                    assert_eq!(img.headers()["content-type"], "image/png");
                    trial_token
                }
                NextTrial::Finished { .. } => break,
            };
            let fb: Feedback = http
                .post(format!("{base}/sessions/{sid}/answer"))
                .json(&json!({"trial_token": token, "answer": "left", "response_ms": 400}))
                .send()
                .await
                .unwrap()
                .json()
                .await
                .unwrap();
            answered += 1;
            assert_eq!(fb.progress.answered, answered);
        }
        assert_eq!(answered, 30);
        let results: SessionResults = http.get(format!("{base}/sessions/{sid}/results")).send().await.unwrap().json().await.unwrap();
        assert_eq!(results.glyphs.len(), 2);
        assert!(results.glyphs.iter().all(|g| g.answered == 15 && g.score.resolution >= 5.0));
        let csv = http
            .get(format!("{base}/sessions/{sid}/results/{}/curve.csv", ids[0]))
            .send()
            .await
            .unwrap()
            .text()
            .await
            .unwrap();
        assert!(csv.starts_with("t,d,n,accuracy,ci_low,ci_high\n"));
    });
}
