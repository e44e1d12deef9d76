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

//! A small search engine and answer service for offline probing.
//!
//! `GET /search?q=` renders an old-style results page (ads first, then
//! results as `#ires li.g`). `POST /api/answer` takes `{"question": ..}` and
//! returns `{"answer": ..}`. Both look queries up in a fixed knowledge map.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::grading::normalize;
use crate::server::{self, ServerHandle};

/// Selector that picks result blocks out of [`MockEngine`] pages.
pub const RESULT_SELECTOR: &str = "#ires li.g";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hit {
    pub title: String,
    pub url: String,
    pub snippet: String,
}

impl Hit {
    pub fn new(title: &str, url: &str, snippet: &str) -> Self {
        Hit {
            title: title.into(),
            url: url.into(),
            snippet: snippet.into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockEngine {
    knowledge: BTreeMap<String, Vec<Hit>>,
    /// Added before every response.
    pub delay: Duration,
}

impl MockEngine {
    pub fn empty() -> Self {
        MockEngine::default()
    }

    /// The canned knowledge shipped for tests and demos.
    pub fn with_defaults() -> Self {
        let mut e = MockEngine::empty();
        e.learn(
            "How much is 25 multiply by 4?",
            vec![
                Hit::new("25 × 4 = 100", "http://calc.example/25*4", "Calculator result: 25 × 4 = 100"),
                Hit::new("Multiplication table of 25", "http://maths.example/tables/25", "25, 50, 75, 100, 125"),
            ],
        );
        e.learn(
            "Which planet is the largest in the solar system?",
            vec![
                Hit::new(
                    "Jupiter - Wikipedia, the free encyclopedia",
                    "http://en.wikipedia.org/wiki/Jupiter",
                    "Jupiter is the fifth planet from the Sun and the largest planet in the Solar System.",
                ),
                Hit::new(
                    "Saturn - NASA Solar System Exploration",
                    "http://solarsystem.nasa.gov/planets/saturn",
                    "Saturn is the second largest planet.",
                ),
            ],
        );
        e.learn(
            "Which river is the longest in the world?",
            vec![Hit::new(
                "Nile - Wikipedia, the free encyclopedia",
                "http://en.wikipedia.org/wiki/Nile",
                "The Nile is a major north-flowing river in northeastern Africa.",
            )],
        );
        e.learn(
            "How much is 36 divide 3?",
            vec![Hit::new("36 / 3 = 12", "http://calc.example/36/3", "Calculator result: 36 / 3 = 12")],
        );
        e.learn(
            "Please tell us a story by 1, 2, 3, 4, 5.",
            vec![Hit::new(
                "1 2 3 4 5 - Lyrics",
                "http://lyrics.example/12345",
                "Song lyrics and music video.",
            )],
        );
        e
    }

    pub fn learn(&mut self, query: &str, hits: Vec<Hit>) {
        self.knowledge.insert(normalize(query), hits);
    }

    pub fn lookup(&self, query: &str) -> Vec<Hit> {
        match self.knowledge.get(&normalize(query)) {
            Some(hits) => hits.clone(),
            None => vec![Hit::new(
                "Questions and answers",
                "http://answers.example/",
                "No exact answer was found for this question.",
            )],
        }
    }

    /// The engine's short answer: the first hit's title.
    pub fn answer(&self, query: &str) -> String {
        self.lookup(query).into_iter().next().map(|h| h.title).unwrap_or_default()
    }

    pub fn router(self) -> Router {
        Router::new()
            .route("/search", get(search))
            .route("/api/answer", post(api_answer))
            .with_state(Arc::new(self))
    }

    /// Serves on a background thread until the returned handle is dropped.
    pub fn spawn(self, addr: SocketAddr) -> std::io::Result<MockServer> {
        Ok(MockServer(server::spawn(self.router(), addr)?))
    }
}

pub struct MockServer(ServerHandle);

impl MockServer {
    pub fn addr(&self) -> SocketAddr {
        self.0.addr
    }

    pub fn base_url(&self) -> String {
        self.0.base_url()
    }

    pub fn search_template(&self) -> String {
        format!("{}/search?q={{QUERY}}", self.base_url())
    }

    pub fn answer_endpoint(&self) -> String {
        format!("{}/api/answer", self.base_url())
    }
}

#[derive(Deserialize)]
struct SearchParams {
    #[serde(default)]
    q: String,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn render_page(query: &str, hits: &[Hit]) -> String {
    let q = escape(query);
    let mut page = format!(
        "<!doctype html>\n<html>\n<head><meta charset=\"utf-8\"><title>{q} - Search</title></head>\n<body>\n\
         <div id=\"searchform\"><form action=\"/search\"><input name=\"q\" value=\"{q}\"></form></div>\n\
         <div id=\"center_col\">\n<div id=\"tads\"><ol>\n\
         <li class=\"ads-ad\"><h3><a href=\"http://ads.example/\">Cheap flights to anywhere</a></h3>\
         <div class=\"ads-creative\">Book today and save.</div></li>\n\
         </ol></div>\n<div id=\"ires\"><ol>\n"
    );
    for h in hits {
        page.push_str(&format!(
            "<li class=\"g\"><h3 class=\"r\"><a href=\"{}\">{}</a></h3>\
             <div class=\"s\"><span class=\"st\">{}</span></div></li>\n",
            escape(&h.url),
            escape(&h.title),
            escape(&h.snippet)
        ));
    }
    page.push_str("</ol></div>\n</div>\n</body>\n</html>\n");
    page
}

async fn search(State(engine): State<Arc<MockEngine>>, Query(p): Query<SearchParams>) -> Html<String> {
    if !engine.delay.is_zero() {
        tokio::time::sleep(engine.delay).await;
    }
    Html(render_page(&p.q, &engine.lookup(&p.q)))
}

async fn api_answer(State(engine): State<Arc<MockEngine>>, Json(body): Json<serde_json::Value>) -> Response {
    if !engine.delay.is_zero() {
        tokio::time::sleep(engine.delay).await;
    }
    match body.get("question").and_then(|q| q.as_str()) {
        Some(q) => Json(serde_json::json!({ "answer": engine.answer(q) })).into_response(),
        None => (
            StatusCode::UNPROCESSABLE_ENTITY,
            Json(serde_json::json!({ "error": "missing question" })),
        )
            .into_response(),
    }
}
