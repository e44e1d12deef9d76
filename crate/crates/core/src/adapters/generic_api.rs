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

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{text_only, AdapterFailure, SubjectAdapter, SubjectInfo};
use crate::bank::{Modality, Question};
use crate::grading::{AnswerPayload, AnswerRecord};
use crate::session::{SubjectDescriptor, SubjectKind};

fn default_question_field() -> String {
    "question".into()
}

fn default_answer_pointer() -> String {
    "/answer".into()
}

fn default_timeout_ms() -> u64 {
    60_000
}

/// A JSON-over-HTTP question answering service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericApiConfig {
    pub endpoint: String,
    /// Request body field that carries the prompt.
    #[serde(default = "default_question_field")]
    pub question_field: String,
    /// Optional request body field that carries the question's language tag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_field: Option<String>,
    /// Constant fields merged into every request body.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub static_fields: BTreeMap<String, serde_json::Value>,
    /// JSON pointer to the answer text in the response body.
    #[serde(default = "default_answer_pointer")]
    pub answer_pointer: String,
    /// Name of the environment variable holding a bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub request_timeout_ms: u64,
    #[serde(default = "text_only")]
    pub capabilities: BTreeSet<Modality>,
}

pub struct GenericApiAdapter {
    subject: SubjectInfo,
    config: GenericApiConfig,
    client: reqwest::blocking::Client,
}

impl GenericApiAdapter {
    pub fn new(subject: SubjectInfo, config: GenericApiConfig) -> Result<Self, url::ParseError> {
        url::Url::parse(&config.endpoint)?;
        Ok(GenericApiAdapter {
            subject,
            config,
            client: reqwest::blocking::Client::new(),
        })
    }

    fn body(&self, question: &Question) -> serde_json::Value {
        let mut body = serde_json::Map::new();
        for (k, v) in &self.config.static_fields {
            body.insert(k.clone(), v.clone());
        }
        body.insert(
            self.config.question_field.clone(),
            serde_json::Value::String(question.prompt.clone()),
        );
        if let Some(field) = &self.config.language_field {
            body.insert(field.clone(), serde_json::Value::String(question.language_tag.clone()));
        }
        serde_json::Value::Object(body)
    }

    fn ask(&self, question: &Question, budget: Duration) -> Result<String, String> {
        let timeout = Duration::from_millis(self.config.request_timeout_ms).min(budget);
        let mut req = self
            .client
            .post(&self.config.endpoint)
            .timeout(timeout)
            .json(&self.body(question));
        if let Some(var) = &self.config.auth_token_env {
            let token = std::env::var(var).map_err(|_| format!("environment variable {var} is not set"))?;
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| format!("request failed: {e}"))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("service answered HTTP {status}"));
        }
        let value: serde_json::Value = resp.json().map_err(|e| format!("response is not JSON: {e}"))?;
        match value.pointer(&self.config.answer_pointer) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(serde_json::Value::Null) | None => {
                Err(format!("response has no value at {}", self.config.answer_pointer))
            }
            Some(other) => Ok(other.to_string()),
        }
    }
}

impl SubjectAdapter for GenericApiAdapter {
    fn descriptor(&self) -> SubjectDescriptor {
        self.subject
            .describe(SubjectKind::GenericApi, self.config.capabilities.clone())
    }

    fn probe(&self, question: &Question, budget: Duration) -> Result<AnswerRecord, AdapterFailure> {
        let start = Instant::now();
        let outcome = self.ask(question, budget);
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
