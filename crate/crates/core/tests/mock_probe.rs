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

use std::net::SocketAddr;
use std::time::{Duration, Instant};

use uiq::adapters::{
    GenericApiAdapter, GenericApiConfig, HttpSearchAdapter, HttpSearchConfig, SubjectAdapter, SubjectInfo,
};
use uiq::bundled;
use uiq::clock::ManualClock;
use uiq::grading::{grade_answer, AnswerPayload, VerdictState, DEFAULT_TIMEOUT};
use uiq::mock_engine::{MockEngine, RESULT_SELECTOR};
use uiq::session::{run_session, SessionStatus};

fn local() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

fn info() -> SubjectInfo {
    SubjectInfo {
        id: "mock".into(),
        display_name: "mock".into(),
        group: Some("Nowhere".into()),
        region: None,
    }
}

fn search_config(template: String) -> HttpSearchConfig {
    serde_json::from_value(serde_json::json!({
        "query_url_template": template,
        "result_selector": RESULT_SELECTOR,
        "min_interval_ms": 0,
        "request_timeout_ms": 5000,
    }))
    .unwrap()
}

/// A port that was free a moment ago and now has no listener.
fn dead_port() -> u16 {
    let l = std::net::TcpListener::bind(local()).unwrap();
    l.local_addr().unwrap().port()
}

#[test]
fn calculation_question_is_answered_through_the_first_result() {
    let server = MockEngine::with_defaults().spawn(local()).unwrap();
    let adapter = HttpSearchAdapter::new(info(), search_config(server.search_template())).unwrap();
    let bank = bundled::bank();
    let q = bank.question("q06-1").unwrap();

    let started = Instant::now();
    let rec = adapter.probe(q, DEFAULT_TIMEOUT).unwrap();
    let round_trip = started.elapsed();
    assert!(!rec.delivery_failed, "{:?}", rec.note);
    let Some(AnswerPayload::Text(text)) = &rec.raw_answer else {
        panic!("text answer expected")
    };
    assert_eq!(text, "25 × 4 = 100 Calculator result: 25 × 4 = 100");
    assert!(text.contains("100"));
    assert!(Duration::from_millis(rec.elapsed_ms) <= round_trip);
    assert_eq!(grade_answer(q, &rec, DEFAULT_TIMEOUT).unwrap().state, VerdictState::Correct);
}

#[test]
fn reported_latency_covers_the_server_delay() {
    let mut engine = MockEngine::with_defaults();
    engine.delay = Duration::from_millis(150);
    let server = engine.spawn(local()).unwrap();
    let adapter = HttpSearchAdapter::new(info(), search_config(server.search_template())).unwrap();
    let q = bundled::bank().question("q04-2").unwrap().clone();
    let rec = adapter.probe(&q, DEFAULT_TIMEOUT).unwrap();
    assert!(rec.elapsed_ms >= 150, "elapsed {}", rec.elapsed_ms);
    assert!(rec.raw_answer.unwrap().as_text().unwrap().starts_with("Jupiter"));
}

#[test]
fn request_timeout_is_capped_by_the_budget() {
    let mut engine = MockEngine::with_defaults();
    engine.delay = Duration::from_millis(2_000);
    let server = engine.spawn(local()).unwrap();
    let adapter = HttpSearchAdapter::new(info(), search_config(server.search_template())).unwrap();
    let q = bundled::bank().question("q04-2").unwrap().clone();
    let rec = adapter.probe(&q, Duration::from_millis(200)).unwrap();
    assert!(rec.delivery_failed);
    assert!(rec.note.unwrap().contains("request failed"));
}

#[test]
fn whole_session_against_the_mock_engine() {
    let server = MockEngine::with_defaults().spawn(local()).unwrap();
    let adapter = HttpSearchAdapter::new(info(), search_config(server.search_template())).unwrap();
    let bank = bundled::bank();
    let scale = bundled::scale();
    let clock = ManualClock::pinned();
    let t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "m").unwrap();
    assert_eq!(t.entries.len(), 42);
    let state = |q: &str| t.entry(q).unwrap().verdict.state;
    for q in ["q04-1", "q04-2", "q06-1", "q06-2"] {
        assert_eq!(state(q), VerdictState::Correct, "{q}");
    }
    for q in ["q02-1", "q03-1", "q14-1", "q15-1"] {
        assert_eq!(state(q), VerdictState::Undeliverable, "{q}");
    }
    assert_eq!(state("q04-3"), VerdictState::Incorrect);
    assert_eq!(state("q09-4"), VerdictState::PendingManual);
    assert_eq!(t.status, SessionStatus::PendingGrading);
}

#[test]
fn unreachable_engine_leaves_a_complete_session_of_undeliverables() {
    let template = format!("http://127.0.0.1:{}/search?q={{QUERY}}", dead_port());
    let adapter = HttpSearchAdapter::new(info(), search_config(template)).unwrap();
    let bank = bundled::bank();
    let scale = bundled::scale();
    let clock = ManualClock::pinned();
    let t = run_session(&adapter, &bank, &scale, DEFAULT_TIMEOUT, &clock, "u").unwrap();
    assert_eq!(t.status, SessionStatus::Complete);
    assert!(t.entries.iter().all(|e| e.verdict.state == VerdictState::Undeliverable));
    assert!(t.entries.iter().filter(|e| e.answer.delivery_failed).count() >= 38);
    let v = uiq::scoring::transcript_vector(&t, &bank, &scale).unwrap();
    assert!(v.values.iter().all(|&x| x == 0));
}

#[test]
fn page_without_results_is_undeliverable() {
    let server = MockEngine::with_defaults().spawn(local()).unwrap();
    let mut cfg = search_config(server.search_template());
    cfg.result_selector = "#nothing-here li".into();
    let adapter = HttpSearchAdapter::new(info(), cfg).unwrap();
    let q = bundled::bank().question("q06-1").unwrap().clone();
    let rec = adapter.probe(&q, DEFAULT_TIMEOUT).unwrap();
    assert!(rec.delivery_failed);
}

#[test]
fn generic_api_against_the_mock_service() {
    let server = MockEngine::with_defaults().spawn(local()).unwrap();
    let cfg: GenericApiConfig = serde_json::from_value(serde_json::json!({
        "endpoint": server.answer_endpoint(),
        "static_fields": {"model": "test"},
    }))
    .unwrap();
    let adapter = GenericApiAdapter::new(info(), cfg).unwrap();
    let bank = bundled::bank();
    let q = bank.question("q06-2").unwrap();
    let rec = adapter.probe(q, DEFAULT_TIMEOUT).unwrap();
    assert_eq!(rec.raw_answer, Some(AnswerPayload::Text("36 / 3 = 12".into())));
    assert_eq!(grade_answer(q, &rec, DEFAULT_TIMEOUT).unwrap().state, VerdictState::Correct);

    let bad_pointer: GenericApiConfig = serde_json::from_value(serde_json::json!({
        "endpoint": server.answer_endpoint(),
        "answer_pointer": "/choices/0/text",
    }))
    .unwrap();
    let rec = GenericApiAdapter::new(info(), bad_pointer).unwrap().probe(q, DEFAULT_TIMEOUT).unwrap();
    assert!(rec.delivery_failed);
}

#[test]
fn generic_api_reads_the_token_from_the_environment_only() {
    let server = MockEngine::with_defaults().spawn(local()).unwrap();
    let cfg: GenericApiConfig = serde_json::from_value(serde_json::json!({
        "endpoint": server.answer_endpoint(),
        "auth_token_env": "UIQ_TEST_TOKEN_THAT_IS_NOT_SET",
    }))
    .unwrap();
    let q = bundled::bank().question("q06-2").unwrap().clone();
    let rec = GenericApiAdapter::new(info(), cfg).unwrap().probe(&q, DEFAULT_TIMEOUT).unwrap();
    assert!(rec.delivery_failed);
    assert!(rec.note.unwrap().contains("UIQ_TEST_TOKEN_THAT_IS_NOT_SET"));
}
