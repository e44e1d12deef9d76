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

//! Test subjects behind one probing contract.
//!
//! Every ordinary failure (unreachable host, nothing to extract, unsupported
//! modality) is encoded in the returned [`AnswerRecord`]. `Err` is reserved
//! for an adapter that can no longer serve the session at all.

mod extract;
mod generic_api;
mod http_search;
mod human;
mod scripted;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{Modality, Question};
use crate::grading::AnswerRecord;
use crate::session::{SubjectDescriptor, SubjectKind};

pub use extract::{extract_first_result, ExtractError};
pub use generic_api::{GenericApiAdapter, GenericApiConfig};
pub use http_search::{build_query_url, HttpSearchAdapter, HttpSearchConfig, TemplateError};
pub use human::{BridgeError, HumanBridge, ParkedQuestion};
pub use scripted::{ScriptedAdapter, ScriptedAnswer, ScriptedConfig};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct AdapterFailure(pub String);

pub trait SubjectAdapter: Send + Sync {
    fn descriptor(&self) -> SubjectDescriptor;

    fn capabilities(&self) -> BTreeSet<Modality> {
        self.descriptor().capabilities
    }

    /// Presents one question and reports what came back and how long it took.
    fn probe(&self, question: &Question, budget: Duration) -> Result<AnswerRecord, AdapterFailure>;
}

pub fn declare_capabilities(adapter: &dyn SubjectAdapter) -> BTreeSet<Modality> {
    adapter.capabilities()
}

/// Who is being tested, as written in a subject config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectInfo {
    pub id: String,
    pub display_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
}

impl SubjectInfo {
    pub fn describe(&self, kind: SubjectKind, capabilities: BTreeSet<Modality>) -> SubjectDescriptor {
        SubjectDescriptor {
            id: self.id.clone(),
            display_name: self.display_name.clone(),
            kind,
            group: self.group.clone(),
            region: self.region.clone(),
            capabilities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterConfig {
    Scripted(ScriptedConfig),
    HttpSearch(HttpSearchConfig),
    GenericApi(GenericApiConfig),
    Human(HumanConfig),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capabilities: Option<BTreeSet<Modality>>,
}

/// A subject config file: who, plus how to reach them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectConfig {
    pub subject: SubjectInfo,
    #[serde(flatten)]
    pub adapter: AdapterConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read subject config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed subject config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid subject config: {0}")]
    Invalid(String),
}

impl SubjectConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: SubjectConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.subject.id.trim().is_empty() {
            return Err(ConfigError::Invalid("subject.id is empty".into()));
        }
        let caps = match &self.adapter {
            AdapterConfig::Scripted(c) => Some(&c.capabilities),
            AdapterConfig::HttpSearch(c) => {
                http_search::validate_template(&c.query_url_template)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                scraper::Selector::parse(&c.result_selector)
                    .map_err(|e| ConfigError::Invalid(format!("result_selector: {e}")))?;
                Some(&c.capabilities)
            }
            AdapterConfig::GenericApi(c) => {
                url::Url::parse(&c.endpoint)
                    .map_err(|e| ConfigError::Invalid(format!("endpoint: {e}")))?;
                if !c.answer_pointer.is_empty() && !c.answer_pointer.starts_with('/') {
                    return Err(ConfigError::Invalid(
                        "answer_pointer must be a JSON pointer starting with `/`".into(),
                    ));
                }
                Some(&c.capabilities)
            }
            AdapterConfig::Human(c) => c.capabilities.as_ref(),
        };
        if caps.is_some_and(BTreeSet::is_empty) {
            return Err(ConfigError::Invalid("capabilities must not be empty".into()));
        }
        Ok(())
    }

    /// Builds the adapter. Human subjects get a bridge that parks questions
    /// until someone answers them.
    pub fn build(&self) -> Result<Box<dyn SubjectAdapter>, ConfigError> {
        self.validate()?;
        Ok(match &self.adapter {
            AdapterConfig::Scripted(c) => Box::new(ScriptedAdapter::new(self.subject.clone(), c.clone())),
            AdapterConfig::HttpSearch(c) => Box::new(
                HttpSearchAdapter::new(self.subject.clone(), c.clone())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
            AdapterConfig::GenericApi(c) => Box::new(
                GenericApiAdapter::new(self.subject.clone(), c.clone())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
            AdapterConfig::Human(c) => Box::new(HumanBridge::new(
                self.subject.clone(),
                c.capabilities.clone().unwrap_or_else(|| Modality::ALL.into_iter().collect()),
            )),
        })
    }
}

pub(crate) fn text_only() -> BTreeSet<Modality> {
    BTreeSet::from([Modality::Text])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn capability_defaults() {
        let http = SubjectConfig::from_json(
            r#"{"kind":"http_search","subject":{"id":"e","display_name":"E"},
                "query_url_template":"http://127.0.0.1:9/search?q={QUERY}",
                "result_selector":"li.g"}"#,
        )
        .unwrap();
        let adapter = http.build().unwrap();
        assert_eq!(declare_capabilities(adapter.as_ref()), BTreeSet::from([Modality::Text]));

        let scripted = SubjectConfig::from_json(
            r#"{"kind":"scripted","subject":{"id":"s","display_name":"S"},
                "capabilities":["text","audio"],"answers":{}}"#,
        )
        .unwrap();
        assert_eq!(
            declare_capabilities(scripted.build().unwrap().as_ref()),
            BTreeSet::from([Modality::Text, Modality::Audio])
        );

        let human = SubjectConfig::from_json(r#"{"kind":"human","subject":{"id":"h","display_name":"H"}}"#)
            .unwrap();
        assert_eq!(
            declare_capabilities(human.build().unwrap().as_ref()),
            Modality::ALL.into_iter().collect()
        );
    }

    #[test]
    fn bad_configs_are_rejected() {
        let two_placeholders = r#"{"kind":"http_search","subject":{"id":"e","display_name":"E"},
            "query_url_template":"http://x/{QUERY}/{QUERY}","result_selector":"li"}"#;
        assert!(matches!(SubjectConfig::from_json(two_placeholders), Err(ConfigError::Invalid(_))));
        let bad_selector = r#"{"kind":"http_search","subject":{"id":"e","display_name":"E"},
            "query_url_template":"http://x/?q={QUERY}","result_selector":"li[["}"#;
        assert!(matches!(SubjectConfig::from_json(bad_selector), Err(ConfigError::Invalid(_))));
        assert!(matches!(SubjectConfig::from_json("{}"), Err(ConfigError::Parse(_))));
        let no_caps = r#"{"kind":"scripted","subject":{"id":"s","display_name":"S"},"capabilities":[],"answers":{}}"#;
        assert!(matches!(SubjectConfig::from_json(no_caps), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn google_behavior_fixture_parses() {
        let cfg = SubjectConfig::from_json(bundled::GOOGLE_BEHAVIOR_JSON).unwrap();
        assert_eq!(cfg.subject.display_name, "google");
        assert!(matches!(cfg.adapter, AdapterConfig::Scripted(_)));
    }
}
