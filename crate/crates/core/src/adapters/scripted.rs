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
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{text_only, AdapterFailure, SubjectAdapter, SubjectInfo};
use crate::bank::{GradingSpec, Modality, Question, QuestionBank};
use crate::grading::{AnswerPayload, AnswerRecord, GradingError};
use crate::scale::{Scale, SubTestScoreVector};
use crate::session::{SessionTranscript, SubjectDescriptor, SubjectKind};

/// One canned reply.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedAnswer {
    #[serde(default)]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<String>,
    #[serde(default)]
    pub latency_ms: u64,
    /// Never answer; the probe waits out its whole budget.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub no_response: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptedConfig {
    #[serde(default = "text_only")]
    pub capabilities: BTreeSet<Modality>,
    #[serde(default)]
    pub answers: BTreeMap<String, ScriptedAnswer>,
    /// Reply used for questions missing from `answers`. Absent means silence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<ScriptedAnswer>,
    /// Pass/fail to file for manual-mode questions once the run ends.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub manual_verdicts: BTreeMap<String, bool>,
    /// Simulates the adapter dying after this many probes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_after: Option<usize>,
}

impl ScriptedConfig {
    /// A script that answers every auto-graded question correctly in
    /// `latency` and passes or fails every manual question per `manual_pass`.
    pub fn all_correct(bank: &QuestionBank, latency: Duration, manual_pass: Option<bool>) -> Self {
        let mut answers = BTreeMap::new();
        let mut manual_verdicts = BTreeMap::new();
        for q in &bank.questions {
            answers.insert(q.id.clone(), correct_reply(q, latency));
            if let (GradingSpec::Manual { .. }, Some(pass)) = (&q.grading, manual_pass) {
                manual_verdicts.insert(q.id.clone(), pass);
            }
        }
        ScriptedConfig {
            capabilities: Modality::ALL.into_iter().collect(),
            answers,
            default: None,
            manual_verdicts,
            fail_after: None,
        }
    }

    /// A script that reproduces `vector` exactly: in each subtest the first
    /// `score / points_per_question` questions are answered correctly and
    /// the rest get a wrong answer (or a failing manual verdict).
    pub fn replaying(bank: &QuestionBank, scale: &Scale, vector: &SubTestScoreVector) -> Self {
        let mut answers = BTreeMap::new();
        let mut manual_verdicts = BTreeMap::new();
        for (st, &score) in scale.subtests.iter().zip(&vector.values) {
            let want = (score / st.points_per_question()) as usize;
            let qs = bank.questions.iter().filter(|q| q.subtest_index == st.index);
            for (i, q) in qs.enumerate() {
                let pass = i < want;
                let reply = if pass {
                    correct_reply(q, Duration::from_millis(10))
                } else {
                    ScriptedAnswer {
                        answer: Some("no relevant results".into()),
                        asset: None,
                        latency_ms: 10,
                        no_response: false,
                    }
                };
                answers.insert(q.id.clone(), reply);
                if q.grading.is_manual() {
                    manual_verdicts.insert(q.id.clone(), pass);
                }
            }
        }
        ScriptedConfig {
            capabilities: Modality::ALL.into_iter().collect(),
            answers,
            default: None,
            manual_verdicts,
            fail_after: None,
        }
    }

    /// Files the scripted manual verdicts on a finished transcript.
    pub fn apply_manual_verdicts(
        &self,
        transcript: &mut SessionTranscript,
        bank: &QuestionBank,
    ) -> Result<usize, GradingError> {
        let pending: Vec<String> = transcript
            .pending_manual()
            .map(|e| e.question_id.clone())
            .collect();
        let mut applied = 0;
        for qid in pending {
            if let Some(&pass) = self.manual_verdicts.get(&qid) {
                transcript.record_manual_verdict(bank, &qid, pass, "scripted verdict")?;
                applied += 1;
            }
        }
        Ok(applied)
    }
}

fn correct_reply(q: &Question, latency: Duration) -> ScriptedAnswer {
    let answer = match &q.grading {
        GradingSpec::ExactSet { accepted } => accepted[0].clone(),
        GradingSpec::Numeric { numeric } => numeric.value.to_string(),
        GradingSpec::Manual { .. } => format!("scripted response to {}", q.id),
    };
    ScriptedAnswer {
        answer: Some(answer),
        asset: None,
        latency_ms: latency.as_millis() as u64,
        no_response: false,
    }
}

/// Replays canned answers with simulated latencies.
#[derive(Debug)]
pub struct ScriptedAdapter {
    subject: SubjectInfo,
    config: ScriptedConfig,
    probes: std::sync::atomic::AtomicUsize,
}

impl ScriptedAdapter {
    pub fn new(subject: SubjectInfo, config: ScriptedConfig) -> Self {
        ScriptedAdapter {
            subject,
            config,
            probes: Default::default(),
        }
    }

    pub fn config(&self) -> &ScriptedConfig {
        &self.config
    }
}

impl SubjectAdapter for ScriptedAdapter {
    fn descriptor(&self) -> SubjectDescriptor {
        self.subject
            .describe(SubjectKind::Scripted, self.config.capabilities.clone())
    }

    fn probe(&self, question: &Question, budget: Duration) -> Result<AnswerRecord, AdapterFailure> {
        let n = self.probes.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        if self.config.fail_after.is_some_and(|limit| n >= limit) {
            return Err(AdapterFailure(format!("scripted failure after {n} probes")));
        }
        let reply = self
            .config
            .answers
            .get(&question.id)
            .or(self.config.default.as_ref());
        let Some(reply) = reply else {
            return Ok(AnswerRecord::silent(&question.id, Duration::ZERO));
        };
        if reply.no_response {
            return Ok(AnswerRecord::silent(&question.id, budget + Duration::from_millis(1)));
        }
        let payload = match (&reply.answer, &reply.asset) {
            (_, Some(asset)) => Some(AnswerPayload::Asset(asset.clone())),
            (Some(text), None) => Some(AnswerPayload::Text(text.clone())),
            (None, None) => None,
        };
        Ok(AnswerRecord {
            question_id: question.id.clone(),
            raw_answer: payload,
            elapsed_ms: reply.latency_ms,
            delivery_failed: false,
            note: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn info() -> SubjectInfo {
        SubjectInfo {
            id: "s".into(),
            display_name: "S".into(),
            group: None,
            region: None,
        }
    }

    #[test]
    fn echoes_fixture_entry() {
        let bank = bundled::bank();
        let mut answers = BTreeMap::new();
        answers.insert(
            "q06-1".to_string(),
            ScriptedAnswer {
                answer: Some("100".into()),
                asset: None,
                latency_ms: 50,
                no_response: false,
            },
        );
        let cfg = ScriptedConfig {
            capabilities: text_only(),
            answers,
            default: None,
            manual_verdicts: BTreeMap::new(),
            fail_after: None,
        };
        let adapter = ScriptedAdapter::new(info(), cfg);
        let rec = adapter
            .probe(bank.question("q06-1").unwrap(), Duration::from_secs(180))
            .unwrap();
        assert_eq!(rec.raw_answer, Some(AnswerPayload::Text("100".into())));
        assert_eq!(rec.elapsed_ms, 50);
        assert!(!rec.delivery_failed);
    }

    #[test]
    fn no_response_exhausts_budget() {
        let bank = bundled::bank();
        let cfg = ScriptedConfig {
            capabilities: text_only(),
            answers: BTreeMap::new(),
            default: Some(ScriptedAnswer {
                answer: None,
                asset: None,
                latency_ms: 0,
                no_response: true,
            }),
            manual_verdicts: BTreeMap::new(),
            fail_after: None,
        };
        let adapter = ScriptedAdapter::new(info(), cfg);
        let rec = adapter
            .probe(&bank.questions[0], Duration::from_millis(180_000))
            .unwrap();
        assert_eq!(rec.elapsed_ms, 180_001);
        assert_eq!(rec.raw_answer, None);
    }
}
