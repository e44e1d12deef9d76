// Copyright 2026 The uiq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::sync::Arc;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};
use uiq::bundled;
use uiq::clock::ManualClock;
use uiq::server::{self, ServerHandle};
use uiq::service::{router, ServiceConfig};
use uiq::store::Store;

struct Harness {
    server: ServerHandle,
    clock: Arc<ManualClock>,
    http: Client,
    _dir: Option<tempfile::TempDir>,
}

fn start(dir: &std::path::Path, default_run: Option<&str>) -> (ServerHandle, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::pinned());
    let cfg = ServiceConfig {
        store: Store::open(dir).unwrap(),
        bank: bundled::bank(),
        scale: bundled::scale(),
        clock: clock.clone(),
        timeout: Duration::from_millis(180_000),
        default_run: default_run.map(String::from),
        ui_dir: None,
    };
    (server::spawn(router(cfg), "127.0.0.1:0".parse().unwrap()).unwrap(), clock)
}

impl Harness {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (server, clock) = start(dir.path(), Some("live"));
        Harness {
            server,
            clock,
            http: Client::new(),
            _dir: Some(dir),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.server.base_url())
    }

    fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.http.get(self.url(path)).send().unwrap();
        (r.status(), r.json().unwrap_or(Value::Null))
    }

    fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self.http.post(self.url(path)).json(&body).send().unwrap();
        (r.status(), r.json().unwrap_or(Value::Null))
    }

    fn new_session(&self, name: &str) -> String {
        let (status, body) = self.post("/api/sessions", json!({ "subject_name": name }));
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }

    fn answer_head(&self, sid: &str, answer: Option<&str>) -> Value {
        let (_, next) = self.get(&format!("/api/sessions/{sid}/next"));
        let qid = next["question"]["id"].as_str().unwrap().to_string();
        let (status, body) = self.post(
            &format!("/api/sessions/{sid}/answers"),
            json!({ "question_id": qid, "answer": answer }),
        );
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body
    }
}

#[test]
fn create_session_validates_the_subject() {
    let h = Harness::new();
    let (status, body) = h.post("/api/sessions", json!({ "subject_name": "Ada" }));
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["total"], 42);
    assert_eq!(body["timeout_ms"], 180_000);
    assert_eq!(h.post("/api/sessions", json!({ "subject_name": "  " })).0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        h.post("/api/sessions", json!({ "subject_name": "A", "subject_id": "../etc" })).0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    let r = h.http.post(h.url("/api/sessions")).body("{}").header("content-type", "application/json").send().unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
}

#[test]
fn questions_come_one_at_a_time_in_order() {
    let h = Harness::new();
    let sid = h.new_session("Ada");
    let (status, next) = h.get(&format!("/api/sessions/{sid}/next"));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(next["question"]["id"], "q01-1");
    assert_eq!(next["remaining_ms"], 180_000);

    let (status, _) = h.post(
        &format!("/api/sessions/{sid}/answers"),
        json!({ "question_id": "q02-1", "answer": "2" }),
    );
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, body) = h.post(
        &format!("/api/sessions/{sid}/answers"),
        json!({ "question_id": "q01-1", "answer": "2" }),
    );
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["verdict"], "correct");

    let (status, _) = h.post(
        &format!("/api/sessions/{sid}/answers"),
        json!({ "question_id": "q01-1", "answer": "2" }),
    );
    assert_eq!(status, StatusCode::CONFLICT);

    // Answering before the question has been fetched is refused too.
    let (status, _) = h.post(
        &format!("/api/sessions/{sid}/answers"),
        json!({ "question_id": "q02-1", "answer": "2" }),
    );
    assert_eq!(status, StatusCode::CONFLICT);

    assert_eq!(h.get("/api/sessions/nope/next").0, StatusCode::NOT_FOUND);
    assert_eq!(h.get(&format!("/api/sessions/{sid}/report")).0, StatusCode::CONFLICT);
    let (status, _) = h.post(
        &format!("/api/sessions/{sid}/answers"),
        json!({ "question_id": "q99-9", "answer": "x" }),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[test]
fn server_clock_decides_timeouts_and_survives_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let sid;
    {
        let (server, clock) = start(dir.path(), None);
        let h = Harness {
            server,
            clock,
            http: Client::new(),
            _dir: None,
        };
        sid = h.new_session("Slow");
        let (_, next) = h.get(&format!("/api/sessions/{sid}/next"));
        assert_eq!(next["question"]["id"], "q01-1");
        h.clock.advance(Duration::from_secs(60));
        let (_, again) = h.get(&format!("/api/sessions/{sid}/next"));
        assert_eq!(again["remaining_ms"], 120_000);
        assert_eq!(again["dispatched_at"], next["dispatched_at"]);
    }
    // A new server process on the same store: the dispatch time persisted.
    let (server, clock) = start(dir.path(), None);
    clock.advance(Duration::from_millis(180_001));
    let h = Harness {
        server,
        clock,
        http: Client::new(),
        _dir: None,
    };
    let (_, next) = h.get(&format!("/api/sessions/{sid}/next"));
    assert_eq!(next["question"]["id"], "q01-1");
    assert_eq!(next["remaining_ms"], 0);
    let (_, body) = h.post(
        &format!("/api/sessions/{sid}/answers"),
        json!({ "question_id": "q01-1", "answer": "2" }),
    );
    assert_eq!(body["verdict"], "timeout");
    assert_eq!(body["elapsed_ms"], 180_001);
}

#[test]
fn full_session_grading_and_leaderboard() {
    let h = Harness::new();
    let bank = bundled::bank();
    let sid = h.new_session("Ada Lovelace");
    for q in &bank.questions {
        let answer = match &q.grading {
            uiq::GradingSpec::ExactSet { accepted } => accepted[0].clone(),
            uiq::GradingSpec::Numeric { numeric } => numeric.value.to_string(),
            uiq::GradingSpec::Manual { .. } => "my answer".into(),
        };
        h.clock.advance(Duration::from_secs(5));
        let body = h.answer_head(&sid, Some(&answer));
        assert_eq!(body["question_id"], q.id.as_str());
    }
    let (_, done) = h.get(&format!("/api/sessions/{sid}/next"));
    assert_eq!(done["done"], true);
    let (status, report) = h.get(&format!("/api/sessions/{sid}/report"));
    assert_eq!(status, StatusCode::OK);
    assert_eq!(report["status"], "pending_grading");
    assert_eq!(report["pending_manual"], 9);
    assert_eq!(h.get("/api/leaderboard?run=live").0, StatusCode::NOT_FOUND);

    let (_, queue) = h.get("/api/grading/queue");
    let items = queue["items"].as_array().unwrap().clone();
    assert_eq!(items.len(), 9);
    for (i, item) in items.iter().enumerate() {
        let id = item["answer_id"].as_str().unwrap();
        let (status, body) = h.post(&format!("/api/grading/{id}/verdict"), json!({ "pass": i != 0 }));
        assert_eq!(status, StatusCode::OK, "{body}");
    }
    let first = items[0]["answer_id"].as_str().unwrap();
    assert_eq!(h.post(&format!("/api/grading/{first}/verdict"), json!({ "pass": true })).0, StatusCode::CONFLICT);
    assert_eq!(h.post("/api/grading/ghost:q09-1/verdict", json!({ "pass": true })).0, StatusCode::NOT_FOUND);
    assert_eq!(h.post("/api/grading/garbage/verdict", json!({ "pass": true })).0, StatusCode::NOT_FOUND);
    assert_eq!(h.get("/api/grading/queue").1["items"], json!([]));

    let (_, report) = h.get(&format!("/api/sessions/{sid}/report"));
    assert_eq!(report["status"], "complete");
    // The first queued item is q08-3, one of four Innovation-category questions.
    assert_eq!(report["report"]["iq"], json!(97));
    let (status, board) = h.get("/api/leaderboard?run=live");
    assert_eq!(status, StatusCode::OK);
    assert_eq!(board["entries"][0]["name"], "Ada Lovelace");
    assert_eq!(board["entries"][0]["iq"], json!(97));
    assert_eq!(h.get("/api/leaderboard").1["run_id"], "live");
}

#[test]
fn leaderboard_serves_the_fixture_run_in_table_order() {
    let dir = tempfile::tempdir().unwrap();
    let r = uiq::cli::run([
        "uiq",
        "--store",
        dir.path().to_str().unwrap(),
        "score",
        "--from-matrix",
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/table2.json"),
        concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/table3.json"),
        "--run",
        "fixture",
    ]);
    assert_eq!(r.exit_code, 0, "{}", r.output);
    let (server, _clock) = start(dir.path(), None);
    let http = Client::new();
    let board: Value = http
        .get(format!("{}/api/leaderboard?run=fixture", server.base_url()))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let expected: Value = serde_json::from_str(bundled::TABLE4_EXPECTED_JSON).unwrap();
    let got: Vec<(String, f64)> = board["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["subject_id"].as_str().unwrap().to_string(), e["iq"].as_f64().unwrap()))
        .collect();
    let want: Vec<f64> = expected["entries"].as_array().unwrap().iter().map(|e| e["iq"].as_f64().unwrap()).collect();
    assert_eq!(got.iter().map(|g| g.1).collect::<Vec<_>>(), want);
    assert_eq!(got[3].0, "usa-google");
    let unknown = http.get(format!("{}/api/leaderboard?run=nope", server.base_url())).send().unwrap();
    assert_eq!(unknown.status(), StatusCode::NOT_FOUND);
}

#[test]
fn api_and_cli_score_a_transcript_identically() {
    let h = Harness::new();
    let bank = bundled::bank();
    let sid = h.new_session("Parity");
    for i in 0..bank.questions.len() {
        let answer = if i % 3 == 0 { "wrong" } else { "2" };
        h.answer_head(&sid, Some(answer));
    }
    let (_, queue) = h.get("/api/grading/queue");
    for item in queue["items"].as_array().unwrap() {
        let id = item["answer_id"].as_str().unwrap();
        h.post(&format!("/api/grading/{id}/verdict"), json!({ "pass": true }));
    }
    let (_, api) = h.get(&format!("/api/sessions/{sid}/report"));

    let store_dir = h._dir.as_ref().unwrap().path().to_str().unwrap().to_string();
    let cli = uiq::cli::run(["uiq", "--store", &store_dir, "report", "--session", &sid, "--format", "json"]);
    assert_eq!(cli.exit_code, 0, "{}", cli.output);
    let cli: Value = serde_json::from_str(&cli.output).unwrap();
    assert_eq!(api["report"]["iq"], cli["iq"]);
    assert_eq!(api["report"]["vector"], cli["vector"]["values"]);
}

#[test]
fn static_ui_is_optional() {
    let dir = tempfile::tempdir().unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<h1>uiq</h1>").unwrap();
    let cfg = ServiceConfig {
        store: Store::open(dir.path()).unwrap(),
        bank: bundled::bank(),
        scale: bundled::scale(),
        clock: Arc::new(ManualClock::pinned()),
        timeout: Duration::from_millis(180_000),
        default_run: None,
        ui_dir: Some(ui.path().to_path_buf()),
    };
    let server = server::spawn(router(cfg), "127.0.0.1:0".parse().unwrap()).unwrap();
    let body = reqwest::blocking::get(format!("{}/index.html", server.base_url())).unwrap().text().unwrap();
    assert_eq!(body, "<h1>uiq</h1>");
    let api = reqwest::blocking::get(format!("{}/api/grading/queue", server.base_url())).unwrap();
    assert_eq!(api.status(), StatusCode::OK);
}
