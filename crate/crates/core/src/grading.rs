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

//! Answer grading and per-subtest aggregation.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{GradingSpec, Question};
use crate::scale::SubTestDef;

/// Three minutes. An answer taking strictly longer than this scores zero.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(180_000);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerPayload {
    Text(String),
    /// Reference to an uploaded audio/image file.
    Asset(String),
}

impl AnswerPayload {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            AnswerPayload::Text(t) => Some(t),
            AnswerPayload::Asset(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub question_id: String,
    #[serde(default)]
    pub raw_answer: Option<AnswerPayload>,
    pub elapsed_ms: u64,
    #[serde(default)]
    pub delivery_failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl AnswerRecord {
    pub fn text(question_id: impl Into<String>, answer: impl Into<String>, elapsed: Duration) -> Self {
        AnswerRecord {
            question_id: question_id.into(),
            raw_answer: Some(AnswerPayload::Text(answer.into())),
            elapsed_ms: elapsed.as_millis() as u64,
            delivery_failed: false,
            note: None,
        }
    }

    pub fn silent(question_id: impl Into<String>, elapsed: Duration) -> Self {
        AnswerRecord {
            question_id: question_id.into(),
            raw_answer: None,
            elapsed_ms: elapsed.as_millis() as u64,
            delivery_failed: false,
            note: None,
        }
    }

    pub fn undeliverable(question_id: impl Into<String>, note: impl Into<String>) -> Self {
        AnswerRecord {
            question_id: question_id.into(),
            raw_answer: None,
            elapsed_ms: 0,
            delivery_failed: true,
            note: Some(note.into()),
        }
    }

    pub fn elapsed(&self) -> Duration {
        Duration::from_millis(self.elapsed_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictState {
    Correct,
    Incorrect,
    Timeout,
    Undeliverable,
    PendingManual,
}

impl fmt::Display for VerdictState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictState::Correct => "correct",
            VerdictState::Incorrect => "incorrect",
            VerdictState::Timeout => "timeout",
            VerdictState::Undeliverable => "undeliverable",
            VerdictState::PendingManual => "pending_manual",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradedBy {
    Auto,
    Human,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub state: VerdictState,
    pub graded_by: GradedBy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grader_note: Option<String>,
}

impl Verdict {
    pub fn auto(state: VerdictState) -> Self {
        Verdict {
            state,
            graded_by: GradedBy::Auto,
            grader_note: None,
        }
    }

    pub fn is_pending(&self) -> bool {
        self.state == VerdictState::PendingManual
    }

    pub fn is_correct(&self) -> bool {
        self.state == VerdictState::Correct
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GradingError {
    #[error("answer is for question `{answer}`, not `{question}`")]
    MismatchedIds { question: String, answer: String },
    #[error("question `{0}` is not manual mode")]
    NotManual(String),
    #[error("answer `{0}` is not pending")]
    NotPending(String),
    #[error("unknown answer id `{0}`")]
    UnknownAnswer(String),
    #[error("subtest {index}: expected {expected} verdicts, got {found}")]
    VerdictCount { index: u32, expected: usize, found: usize },
    #[error("subtest {0} still has answers pending manual grading")]
    PendingVerdicts(u32),
}

/// Trims, case-folds, collapses internal whitespace and strips terminal punctuation.
pub fn normalize(text: &str) -> String {
    let folded = text.to_lowercase();
    let collapsed = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || is_wide_punctuation(c) || c.is_whitespace())
        .to_string()
}

fn is_wide_punctuation(c: char) -> bool {
    matches!(c, '。' | '，' | '！' | '？' | '；' | '：' | '、' | '…' | '．')
}

/// Whether `needle` occurs in `haystack` without splitting an ASCII word or number.
fn contains_term(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() {
        return false;
    }
    let word = |c: char| c.is_ascii_alphanumeric();
    haystack.match_indices(needle).any(|(start, _)| {
        let end = start + needle.len();
        let before = haystack[..start].chars().next_back();
        let after = haystack[end..].chars().next();
        let first = needle.chars().next().unwrap();
        let last = needle.chars().next_back().unwrap();
        !(word(first) && before.is_some_and(word)) && !(word(last) && after.is_some_and(word))
    })
}

/// Every decimal number literal in `text`, in order of appearance.
pub fn numbers_in(text: &str) -> Vec<f64> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let mut start = i;
        if i > 0 && chars[i - 1] == '-' && (i < 2 || !chars[i - 2].is_ascii_alphanumeric()) {
            start = i - 1;
        }
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
            i += 1;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
        }
        let literal: String = chars[start..i].iter().collect();
        if let Ok(v) = literal.parse() {
            out.push(v);
        }
    }
    out
}

/// Auto-grades one answer. Manual-mode questions come back `pending_manual`.
pub fn grade_answer(
    question: &Question,
    answer: &AnswerRecord,
    timeout: Duration,
) -> Result<Verdict, GradingError> {
    if answer.question_id != question.id {
        return Err(GradingError::MismatchedIds {
            question: question.id.clone(),
            answer: answer.question_id.clone(),
        });
    }
    if answer.delivery_failed {
        return Ok(Verdict::auto(VerdictState::Undeliverable));
    }
    if answer.elapsed() > timeout {
        return Ok(Verdict::auto(VerdictState::Timeout));
    }
    if question.grading.is_manual() {
        return Ok(Verdict::auto(VerdictState::PendingManual));
    }
    let Some(text) = answer.raw_answer.as_ref().and_then(AnswerPayload::as_text) else {
        return Ok(Verdict::auto(VerdictState::Incorrect));
    };
    let response = normalize(text);
    let correct = match &question.grading {
        GradingSpec::ExactSet { accepted } => accepted
            .iter()
            .map(|a| normalize(a))
            .any(|a| contains_term(&response, &a)),
        GradingSpec::Numeric { numeric } => numbers_in(&response).into_iter().any(|n| numeric.matches(n)),
        GradingSpec::Manual { .. } => unreachable!(),
    };
    Ok(Verdict::auto(if correct {
        VerdictState::Correct
    } else {
        VerdictState::Incorrect
    }))
}

/// Turns a pending manual verdict into a human pass/fail.
pub fn apply_manual_verdict(
    question: &Question,
    current: &Verdict,
    answer_id: &str,
    pass: bool,
    note: &str,
) -> Result<Verdict, GradingError> {
    if !question.grading.is_manual() {
        return Err(GradingError::NotManual(question.id.clone()));
    }
    if !current.is_pending() {
        return Err(GradingError::NotPending(answer_id.to_string()));
    }
    Ok(Verdict {
        state: if pass {
            VerdictState::Correct
        } else {
            VerdictState::Incorrect
        },
        graded_by: GradedBy::Human,
        grader_note: (!note.is_empty()).then(|| note.to_string()),
    })
}

/// `100/n` points per correct answer over an `n`-question subtest.
pub fn subtest_score(subtest: &SubTestDef, verdicts: &[&Verdict]) -> Result<u32, GradingError> {
    if verdicts.len() != subtest.question_count as usize {
        return Err(GradingError::VerdictCount {
            index: subtest.index,
            expected: subtest.question_count as usize,
            found: verdicts.len(),
        });
    }
    if verdicts.iter().any(|v| v.is_pending()) {
        return Err(GradingError::PendingVerdicts(subtest.index));
    }
    let correct = verdicts.iter().filter(|v| v.is_correct()).count() as u32;
    Ok(correct * subtest.points_per_question())
}

/// Identifies one answer within one session: `<session_id>:<question_id>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnswerId {
    pub session_id: String,
    pub question_id: String,
}

impl AnswerId {
    pub fn new(session_id: impl Into<String>, question_id: impl Into<String>) -> Self {
        AnswerId {
            session_id: session_id.into(),
            question_id: question_id.into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self, GradingError> {
        match s.split_once(':') {
            Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok(AnswerId::new(a, b)),
            _ => Err(GradingError::UnknownAnswer(s.to_string())),
        }
    }
}

impl fmt::Display for AnswerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.session_id, self.question_id)
    }
}
