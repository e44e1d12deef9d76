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

//! Test sessions: one subject, one bank, one question in flight at a time.
//!
//! Delivery is pull-based. [`Session::next_question`] dispatches the head
//! question and starts its timer; [`Session::submit_answer`] stamps the
//! answer with the runner's clock. Machine subjects are driven through the
//! same two calls by [`run_session`].

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::SubjectAdapter;
use crate::bank::{Modality, Question, QuestionBank};
use crate::clock::{millis_between, Clock};
use crate::grading::{self, AnswerPayload, AnswerRecord, GradingError, Verdict};
use crate::scale::Scale;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    Scripted,
    HttpSearch,
    GenericApi,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectDescriptor {
    pub id: String,
    pub display_name: String,
    pub kind: SubjectKind,
    /// Country for search engines, age group for humans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
    /// Continent, or "Human".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    pub capabilities: BTreeSet<Modality>,
}

impl SubjectDescriptor {
    pub fn supports(&self, question: &Question) -> bool {
        question
            .required_modalities()
            .iter()
            .all(|m| self.capabilities.contains(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    InProgress,
    PendingGrading,
    Complete,
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionStatus::InProgress => "in_progress",
            SessionStatus::PendingGrading => "pending_grading",
            SessionStatus::Complete => "complete",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub question_id: String,
    pub answer: AnswerRecord,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub session_id: String,
    pub subject: SubjectDescriptor,
    pub bank_id: String,
    pub scale_id: String,
    pub started_at: DateTime<Utc>,
    pub entries: Vec<TranscriptEntry>,
    pub status: SessionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_note: Option<String>,
}

impl SessionTranscript {
    pub fn pending_manual(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.iter().filter(|e| e.verdict.is_pending())
    }

    pub fn entry(&self, question_id: &str) -> Option<&TranscriptEntry> {
        self.entries.iter().find(|e| e.question_id == question_id)
    }

    /// Records a human pass/fail on a pending manual answer.
    pub fn record_manual_verdict(
        &mut self,
        bank: &QuestionBank,
        question_id: &str,
        pass: bool,
        note: &str,
    ) -> Result<Verdict, GradingError> {
        let answer_id = format!("{}:{question_id}", self.session_id);
        let question = bank
            .question(question_id)
            .ok_or_else(|| GradingError::UnknownAnswer(answer_id.clone()))?;
        let entry = self
            .entries
            .iter_mut()
            .find(|e| e.question_id == question_id)
            .ok_or_else(|| GradingError::UnknownAnswer(answer_id.clone()))?;
        let verdict = grading::apply_manual_verdict(question, &entry.verdict, &answer_id, pass, note)?;
        entry.verdict = verdict.clone();
        if self.status == SessionStatus::PendingGrading && self.pending_manual().next().is_none() {
            self.status = SessionStatus::Complete;
        }
        Ok(verdict)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SessionError {
    #[error("session `{0}` is not in progress")]
    Closed(String),
    #[error("question `{got}` is not the current question (expected `{expected}`)")]
    OutOfOrder { expected: String, got: String },
    #[error("question `{0}` was already answered")]
    Duplicate(String),
    #[error("question `{0}` has not been dispatched yet")]
    NotDispatched(String),
    #[error("unknown question `{0}`")]
    UnknownQuestion(String),
    #[error("session is for bank `{expected}`, got `{found}`")]
    WrongBank { expected: String, found: String },
    #[error("bank `{bank}` does not fit scale `{scale}`: {reason}")]
    InvalidPairing { bank: String, scale: String, reason: String },
    #[error("adapter failed mid-session: {reason}")]
    AdapterFatal {
        reason: String,
        transcript: Box<SessionTranscript>,
    },
    #[error(transparent)]
    Grading(#[from] GradingError),
}

/// What `next_question` hands back.
#[derive(Debug, Clone, PartialEq)]
pub enum Next<'b> {
    Question {
        question: &'b Question,
        position: usize,
        total: usize,
        dispatched_at: DateTime<Utc>,
        remaining: Duration,
    },
    Done,
}

/// Live, resumable session state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub transcript: SessionTranscript,
    /// Dispatch instant of the head question, if it has been handed out.
    #[serde(default)]
    pub dispatched_at: Option<DateTime<Utc>>,
    pub timeout_ms: u64,
    /// Run the finished report should be filed under.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
}

impl Session {
    pub fn new(
        session_id: impl Into<String>,
        subject: SubjectDescriptor,
        bank: &QuestionBank,
        timeout: Duration,
        clock: &dyn Clock,
    ) -> Self {
        Session {
            transcript: SessionTranscript {
                session_id: session_id.into(),
                subject,
                bank_id: bank.id.clone(),
                scale_id: bank.scale_id.clone(),
                started_at: clock.now(),
                entries: Vec::with_capacity(bank.questions.len()),
                status: SessionStatus::InProgress,
                error_note: None,
            },
            dispatched_at: None,
            timeout_ms: timeout.as_millis() as u64,
            run_id: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.transcript.session_id
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn status(&self) -> SessionStatus {
        self.transcript.status
    }

    fn check_bank(&self, bank: &QuestionBank) -> Result<(), SessionError> {
        if bank.id != self.transcript.bank_id {
            return Err(SessionError::WrongBank {
                expected: self.transcript.bank_id.clone(),
                found: bank.id.clone(),
            });
        }
        Ok(())
    }

    fn head<'b>(&self, bank: &'b QuestionBank) -> Option<&'b Question> {
        bank.questions.get(self.transcript.entries.len())
    }

    /// Dispatches the head question. Calling it again before answering
    /// returns the same question without restarting its timer.
    pub fn next_question<'b>(
        &mut self,
        bank: &'b QuestionBank,
        clock: &dyn Clock,
    ) -> Result<Next<'b>, SessionError> {
        self.check_bank(bank)?;
        if self.transcript.status != SessionStatus::InProgress {
            return Ok(Next::Done);
        }
        let Some(question) = self.head(bank) else {
            self.finish();
            return Ok(Next::Done);
        };
        let now = clock.now();
        let dispatched_at = *self.dispatched_at.get_or_insert(now);
        let used = Duration::from_millis(millis_between(dispatched_at, now));
        Ok(Next::Question {
            question,
            position: self.transcript.entries.len(),
            total: bank.questions.len(),
            dispatched_at,
            remaining: self.timeout().saturating_sub(used),
        })
    }

    fn expect_head<'b>(&self, bank: &'b QuestionBank, question_id: &str) -> Result<&'b Question, SessionError> {
        if self.transcript.status != SessionStatus::InProgress {
            return Err(SessionError::Closed(self.id().to_string()));
        }
        let Some(pos) = bank.position(question_id) else {
            return Err(SessionError::UnknownQuestion(question_id.to_string()));
        };
        let answered = self.transcript.entries.len();
        if pos < answered {
            return Err(SessionError::Duplicate(question_id.to_string()));
        }
        let head = &bank.questions[answered];
        if pos > answered {
            return Err(SessionError::OutOfOrder {
                expected: head.id.clone(),
                got: question_id.to_string(),
            });
        }
        Ok(head)
    }

    /// Accepts an answer for the head question. Elapsed time is taken from
    /// the runner's clock, never from the submitter.
    pub fn submit_answer(
        &mut self,
        bank: &QuestionBank,
        clock: &dyn Clock,
        question_id: &str,
        payload: Option<AnswerPayload>,
    ) -> Result<&TranscriptEntry, SessionError> {
        self.check_bank(bank)?;
        self.expect_head(bank, question_id)?;
        let Some(dispatched_at) = self.dispatched_at else {
            return Err(SessionError::NotDispatched(question_id.to_string()));
        };
        let record = AnswerRecord {
            question_id: question_id.to_string(),
            raw_answer: payload,
            elapsed_ms: millis_between(dispatched_at, clock.now()),
            delivery_failed: false,
            note: None,
        };
        self.push(bank, record)
    }

    /// Files a probe result. The elapsed time is the larger of what the
    /// runner measured and what the adapter reported.
    pub fn submit_probe(
        &mut self,
        bank: &QuestionBank,
        clock: &dyn Clock,
        mut record: AnswerRecord,
        measured: Duration,
    ) -> Result<&TranscriptEntry, SessionError> {
        self.check_bank(bank)?;
        self.expect_head(bank, &record.question_id)?;
        let dispatched_at = self
            .dispatched_at
            .ok_or_else(|| SessionError::NotDispatched(record.question_id.clone()))?;
        let by_clock = millis_between(dispatched_at, clock.now());
        record.elapsed_ms = record
            .elapsed_ms
            .max(by_clock)
            .max(measured.as_millis() as u64);
        self.push(bank, record)
    }

    /// Records the head question as never delivered.
    pub fn submit_undeliverable(
        &mut self,
        bank: &QuestionBank,
        question_id: &str,
        note: &str,
    ) -> Result<&TranscriptEntry, SessionError> {
        self.check_bank(bank)?;
        self.expect_head(bank, question_id)?;
        self.push(bank, AnswerRecord::undeliverable(question_id, note))
    }

    fn push(&mut self, bank: &QuestionBank, record: AnswerRecord) -> Result<&TranscriptEntry, SessionError> {
        let question = &bank.questions[self.transcript.entries.len()];
        let verdict = grading::grade_answer(question, &record, self.timeout())?;
        self.transcript.entries.push(TranscriptEntry {
            question_id: question.id.clone(),
            answer: record,
            verdict,
        });
        self.dispatched_at = None;
        if self.transcript.entries.len() == bank.questions.len() {
            self.finish();
        }
        Ok(self.transcript.entries.last().expect("just pushed"))
    }

    fn finish(&mut self) {
        if self.transcript.status == SessionStatus::InProgress {
            self.transcript.status = if self.transcript.pending_manual().next().is_some() {
                SessionStatus::PendingGrading
            } else {
                SessionStatus::Complete
            };
        }
    }

    /// Marks every unanswered question undeliverable and closes the session.
    pub fn abort(&mut self, bank: &QuestionBank, reason: &str) {
        while let Some(q) = self.head(bank) {
            let id = q.id.clone();
            self.push(bank, AnswerRecord::undeliverable(id, reason))
                .expect("head question accepts an undeliverable record");
        }
        self.transcript.error_note = Some(reason.to_string());
        self.finish();
    }

    pub fn into_transcript(self) -> SessionTranscript {
        self.transcript
    }
}

/// Administers every bank question to one adapter-driven subject.
pub fn run_session(
    adapter: &dyn SubjectAdapter,
    bank: &QuestionBank,
    scale: &Scale,
    timeout: Duration,
    clock: &dyn Clock,
    session_id: impl Into<String>,
) -> Result<SessionTranscript, SessionError> {
    let violations = bank.validate(scale);
    if !violations.is_empty() {
        return Err(SessionError::InvalidPairing {
            bank: bank.id.clone(),
            scale: scale.id.clone(),
            reason: violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; "),
        });
    }

    let subject = adapter.descriptor();
    let mut session = Session::new(session_id, subject, bank, timeout, clock);
    loop {
        let question = match session.next_question(bank, clock)? {
            Next::Done => break,
            Next::Question { question, .. } => question,
        };
        if !session.transcript.subject.supports(question) {
            let note = format!(
                "subject does not support {}→{} questions",
                question.prompt_modality, question.response_modality
            );
            session.submit_undeliverable(bank, &question.id, &note)?;
            continue;
        }
        let started = Instant::now();
        match adapter.probe(question, timeout) {
            Ok(record) => {
                session.submit_probe(bank, clock, record, started.elapsed())?;
            }
            Err(failure) => {
                let reason = failure.to_string();
                session.abort(bank, &reason);
                return Err(SessionError::AdapterFatal {
                    reason,
                    transcript: Box::new(session.into_transcript()),
                });
            }
        }
    }
    Ok(session.into_transcript())
}
