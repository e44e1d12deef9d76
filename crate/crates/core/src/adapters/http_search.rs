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

use std::collections::{BTreeSet, HashMap};
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::extract::extract_first_result;
use super::{text_only, AdapterFailure, SubjectAdapter, SubjectInfo};
use crate::bank::{Modality, Question};
use crate::grading::{AnswerPayload, AnswerRecord};
use crate::session::{SubjectDescriptor, SubjectKind};

pub const PLACEHOLDER: &str = "{QUERY}";

/// Everything except RFC 3986 unreserved characters gets escaped, so a
/// prompt can never introduce `/`, `?`, `#`, `&` or `@` into the URL.
const QUERY_ESCAPE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_user_agent() -> String {
    concat!("uiq/", env!("CARGO_PKG_VERSION")).to_string()
}

fn default_interval_ms() -> u64 {
    1_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpSearchConfig {
    pub query_url_template: String,
    /// CSS selector for the result blocks; only the first match is read.
    pub result_selector: String,
    #[serde(default = "default_timeout_ms")]
    pub request_timeout_ms: u64,
    #[serde(default = "default_user_agent")]
    pub user_agent: String,
    /// Minimum spacing between two requests to the same host.
    #[serde(default = "default_interval_ms")]
    pub min_interval_ms: u64,
    #[serde(default = "text_only")]
    pub capabilities: BTreeSet<Modality>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("query_url_template must contain exactly one {{QUERY}} placeholder, found {0}")]
    PlaceholderCount(usize),
    #[error("query_url_template is not a URL: {0}")]
    NotAUrl(String),
    #[error("query_url_template must put {{QUERY}} in the query string")]
    PlaceholderOutsideQuery,
}

pub(crate) fn validate_template(template: &str) -> Result<url::Url, TemplateError> {
    let n = template.matches(PLACEHOLDER).count();
    if n != 1 {
        return Err(TemplateError::PlaceholderCount(n));
    }
    let probe = template.replace(PLACEHOLDER, "x");
    let parsed = url::Url::parse(&probe).map_err(|e| TemplateError::NotAUrl(e.to_string()))?;
    // Path segments are normalized (`..` collapses), so the prompt may only
    // land in the query string.
    let at = template.find(PLACEHOLDER).unwrap();
    let in_fragment = template.find('#').is_some_and(|f| f < at);
    if in_fragment || template.find('?').map_or(true, |q| at < q) {
        return Err(TemplateError::PlaceholderOutsideQuery);
    }
    Ok(parsed)
}

/// Substitutes the percent-encoded prompt into the template.
pub fn build_query_url(template: &str, prompt: &str) -> Result<url::Url, TemplateError> {
    validate_template(template)?;
    let encoded = utf8_percent_encode(prompt, QUERY_ESCAPE).to_string();
    url::Url::parse(&template.replace(PLACEHOLDER, &encoded))
        .map_err(|e| TemplateError::NotAUrl(e.to_string()))
}

/// Last request time per host, shared by every adapter in the process.
fn politeness() -> &'static Mutex<HashMap<String, Instant>> {
    static LAST: OnceLock<Mutex<HashMap<String, Instant>>> = OnceLock::new();
    LAST.get_or_init(Default::default)
}

fn wait_turn(host: &str, interval: Duration) {
    if interval.is_zero() {
        return;
    }
    loop {
        let wait = {
            let mut last = politeness().lock().unwrap();
            let now = Instant::now();
            match last.get(host) {
                Some(&t) if now < t + interval => t + interval - now,
                _ => {
                    last.insert(host.to_string(), now);
                    return;
                }
            }
        };
        std::thread::sleep(wait);
    }
}

/// Queries a search engine and keeps only the first result's text.
pub struct HttpSearchAdapter {
    subject: SubjectInfo,
    config: HttpSearchConfig,
    client: reqwest::blocking::Client,
}

impl HttpSearchAdapter {
    pub fn new(subject: SubjectInfo, config: HttpSearchConfig) -> Result<Self, TemplateError> {
        validate_template(&config.query_url_template)?;
        let client = reqwest::blocking::Client::builder()
            .user_agent(config.user_agent.clone())
            .build()
            .expect("http client builds");
        Ok(HttpSearchAdapter {
            subject,
            config,
            client,
        })
    }

    fn fetch(&self, question: &Question, budget: Duration) -> Result<String, String> {
        let url = build_query_url(&self.config.query_url_template, &question.prompt)
            .map_err(|e| e.to_string())?;
        wait_turn(url.host_str().unwrap_or(""), Duration::from_millis(self.config.min_interval_ms));
        let timeout = Duration::from_millis(self.config.request_timeout_ms).min(budget);
        let resp = self
            .client
            .get(url)
            .timeout(timeout)
            .send()
            .map_err(|e| format!("request failed: {e}"))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("engine answered HTTP {status}"));
        }
        let body = resp.text().map_err(|e| format!("unreadable body: {e}"))?;
        extract_first_result(&body, &self.config.result_selector).map_err(|e| e.to_string())
    }
}

impl SubjectAdapter for HttpSearchAdapter {
    fn descriptor(&self) -> SubjectDescriptor {
        self.subject
            .describe(SubjectKind::HttpSearch, self.config.capabilities.clone())
    }

    fn probe(&self, question: &Question, budget: Duration) -> Result<AnswerRecord, AdapterFailure> {
        let start = Instant::now();
        let outcome = self.fetch(question, budget);
        let elapsed_ms = start.elapsed().as_millis() as u64;
        Ok(match outcome {
            Ok(text) => AnswerRecord {
                question_id: question.id.clone(),
                raw_answer: Some(AnswerPayload::Text(text)),
                elapsed_ms,
                delivery_failed: false,
                note: None,
            },
            Err(note) => AnswerRecord {
                elapsed_ms,
                ..AnswerRecord::undeliverable(&question.id, note)
            },
        })
    }
}
