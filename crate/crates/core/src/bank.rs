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

//! The question bank: prompts, modalities and answer keys.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scale::Scale;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Audio,
    Image,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Text, Modality::Audio, Modality::Image];
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Text => "text",
            Modality::Audio => "audio",
            Modality::Image => "image",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericKey {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

impl NumericKey {
    pub fn matches(&self, candidate: f64) -> bool {
        let tol = self.tolerance.unwrap_or(0.0);
        (candidate - self.value).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GradingSpec {
    ExactSet { accepted: Vec<String> },
    Numeric { numeric: NumericKey },
    Manual { rubric: String },
}

impl GradingSpec {
    pub fn is_manual(&self) -> bool {
        matches!(self, GradingSpec::Manual { .. })
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            GradingSpec::ExactSet { .. } => "exact_set",
            GradingSpec::Numeric { .. } => "numeric",
            GradingSpec::Manual { .. } => "manual",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    #[serde(rename = "subtest")]
    pub subtest_index: u32,
    pub prompt: String,
    pub prompt_modality: Modality,
    pub response_modality: Modality,
    #[serde(rename = "language")]
    pub language_tag: String,
    pub grading: GradingSpec,
    /// Relative path of the audio/image prompt payload, next to the bank file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<String>,
    /// Marks a question that replaces one that could not be taken verbatim.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub nonoriginal: bool,
}

impl Question {
    /// Modalities a subject must support to receive and answer this question.
    pub fn required_modalities(&self) -> [Modality; 2] {
        [self.prompt_modality, self.response_modality]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionBank {
    pub id: String,
    pub scale_id: String,
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BankViolation {
    ScaleMismatch { bank_scale: String, scale: String },
    UnknownSubtest { question: String, subtest: u32 },
    CountMismatch { subtest: u32, expected: u32, found: u32 },
    OutOfOrder { question: String },
    DuplicateId { question: String },
    EmptyPrompt { question: String },
    NoAcceptedAnswers { question: String },
    MissingRubric { question: String },
    BadTolerance { question: String },
}

impl fmt::Display for BankViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BankViolation::ScaleMismatch { bank_scale, scale } => {
                write!(f, "bank targets scale `{bank_scale}`, validated against `{scale}`")
            }
            BankViolation::UnknownSubtest { question, subtest } => {
                write!(f, "question {question}: unknown subtest {subtest}")
            }
            BankViolation::CountMismatch {
                subtest,
                expected,
                found,
            } => write!(
                f,
                "subtest {subtest}: expected {expected} questions, found {found}"
            ),
            BankViolation::OutOfOrder { question } => {
                write!(f, "question {question} is out of subtest order")
            }
            BankViolation::DuplicateId { question } => write!(f, "duplicate question id {question}"),
            BankViolation::EmptyPrompt { question } => write!(f, "question {question}: empty prompt"),
            BankViolation::NoAcceptedAnswers { question } => {
                write!(f, "question {question}: exact_set grading needs at least one accepted answer")
            }
            BankViolation::MissingRubric { question } => {
                write!(f, "question {question}: manual grading needs a rubric")
            }
            BankViolation::BadTolerance { question } => {
                write!(f, "question {question}: numeric key must be finite with tolerance ≥ 0")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("malformed bank document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("bank references unknown scale `{0}`")]
    UnknownScale(String),
    #[error("subtest {subtest}: scale declares {expected} questions, bank has {found}")]
    CountMismatch { subtest: u32, expected: u32, found: u32 },
    #[error("bank is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<BankViolation>),
    #[error("subtest index {0} is out of range")]
    SubtestOutOfRange(u32),
}

impl QuestionBank {
    /// Parses a bank document without checking it against a scale.
    pub fn from_json(text: &str) -> Result<QuestionBank, BankError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bank serializes")
    }

    pub fn question(&self, id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.questions.iter().position(|q| q.id == id)
    }

    pub fn manual_count(&self) -> usize {
        self.questions.iter().filter(|q| q.grading.is_manual()).count()
    }

    pub fn validate(&self, scale: &Scale) -> Vec<BankViolation> {
        let mut out = Vec::new();
        if self.scale_id != scale.id {
            out.push(BankViolation::ScaleMismatch {
                bank_scale: self.scale_id.clone(),
                scale: scale.id.clone(),
            });
        }

        let mut ids = HashSet::new();
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        let mut prev_subtest = 0;
        for q in &self.questions {
            if !ids.insert(q.id.as_str()) {
                out.push(BankViolation::DuplicateId { question: q.id.clone() });
            }
            if scale.subtest(q.subtest_index).is_none() {
                out.push(BankViolation::UnknownSubtest {
                    question: q.id.clone(),
                    subtest: q.subtest_index,
                });
            } else {
                *counts.entry(q.subtest_index).or_default() += 1;
            }
            if q.subtest_index < prev_subtest {
                out.push(BankViolation::OutOfOrder { question: q.id.clone() });
            }
            prev_subtest = prev_subtest.max(q.subtest_index);
            if q.prompt.trim().is_empty() {
                out.push(BankViolation::EmptyPrompt { question: q.id.clone() });
            }
            match &q.grading {
                GradingSpec::ExactSet { accepted }
                    if accepted.iter().all(|a| a.trim().is_empty()) =>
                {
                    out.push(BankViolation::NoAcceptedAnswers { question: q.id.clone() })
                }
                GradingSpec::Manual { rubric } if rubric.trim().is_empty() => {
                    out.push(BankViolation::MissingRubric { question: q.id.clone() })
                }
                GradingSpec::Numeric { numeric }
                    if !numeric.value.is_finite()
                        || numeric.tolerance.is_some_and(|t| !(t.is_finite() && t >= 0.0)) =>
                {
                    out.push(BankViolation::BadTolerance { question: q.id.clone() })
                }
                _ => {}
            }
        }

        for st in &scale.subtests {
            let found = counts.get(&st.index).copied().unwrap_or(0);
            if found != st.question_count {
                out.push(BankViolation::CountMismatch {
                    subtest: st.index,
                    expected: st.question_count,
                    found,
                });
            }
        }
        out
    }

    /// The questions of one subtest, in bank order.
    pub fn questions_for(&self, scale: &Scale, subtest_index: u32) -> Result<Vec<&Question>, BankError> {
        if scale.subtest(subtest_index).is_none() {
            return Err(BankError::SubtestOutOfRange(subtest_index));
        }
        Ok(self
            .questions
            .iter()
            .filter(|q| q.subtest_index == subtest_index)
            .collect())
    }
}

/// Parses a bank and checks it against whichever of `scales` it names.
pub fn load_bank(text: &str, scales: &[Scale]) -> Result<QuestionBank, BankError> {
    let bank = QuestionBank::from_json(text)?;
    let scale = scales
        .iter()
        .find(|s| s.id == bank.scale_id)
        .ok_or_else(|| BankError::UnknownScale(bank.scale_id.clone()))?;
    let violations = bank.validate(scale);
    if let Some(BankViolation::CountMismatch {
        subtest,
        expected,
        found,
    }) = violations
        .iter()
        .find(|v| matches!(v, BankViolation::CountMismatch { .. }))
    {
        return Err(BankError::CountMismatch {
            subtest: *subtest,
            expected: *expected,
            found: *found,
        });
    }
    if !violations.is_empty() {
        return Err(BankError::Invalid(violations));
    }
    Ok(bank)
}

pub fn validate_bank(bank: &QuestionBank, scale: &Scale) -> Vec<BankViolation> {
    bank.validate(scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    #[test]
    fn bundled_bank_loads_with_42_questions() {
        let scale = bundled::scale();
        let bank = load_bank(bundled::BANK_JSON, std::slice::from_ref(&scale)).unwrap();
        assert_eq!(bank.questions.len(), 42);
        assert_eq!(bank.validate(&scale), vec![]);
        for st in &scale.subtests {
            let n = bank.questions_for(&scale, st.index).unwrap().len();
            let expected = if [1, 2, 3, 13, 14, 15].contains(&st.index) { 1 } else { 4 };
            assert_eq!(n, expected, "subtest {}", st.index);
        }
    }

    #[test]
    fn calculation_questions() {
        let scale = bundled::scale();
        let bank = bundled::bank();
        let calc = bank.questions_for(&scale, 6).unwrap();
        assert_eq!(calc.len(), 4);
        assert_eq!(calc[0].prompt, "How much is 25 multiply by 4?");
        let first = bank.questions_for(&scale, 1).unwrap();
        assert_eq!(first.len(), 1);
        assert_eq!(first[0].prompt, "1+1=?");
        assert!(matches!(
            bank.questions_for(&scale, 16),
            Err(BankError::SubtestOutOfRange(16))
        ));
    }

    #[test]
    fn missing_calculation_question_is_count_mismatch() {
        let scale = bundled::scale();
        let mut bank = bundled::bank();
        let pos = bank.position("q06-4").unwrap();
        bank.questions.remove(pos);
        let err = load_bank(&bank.to_json(), &[scale]).unwrap_err();
        assert!(
            matches!(err, BankError::CountMismatch { subtest: 6, expected: 4, found: 3 }),
            "{err}"
        );
    }

    #[test]
    fn empty_document_is_parse_error() {
        assert!(matches!(load_bank("", &[bundled::scale()]), Err(BankError::Parse(_))));
    }

    #[test]
    fn unknown_scale() {
        let mut bank = bundled::bank();
        bank.scale_id = "internet-2099".into();
        assert!(matches!(
            load_bank(&bank.to_json(), &[bundled::scale()]),
            Err(BankError::UnknownScale(id)) if id == "internet-2099"
        ));
    }

    #[test]
    fn grading_spec_violations() {
        let scale = bundled::scale();
        let mut bank = bundled::bank();
        let story = bank.position("q09-1").unwrap();
        bank.questions[story].grading = GradingSpec::Manual { rubric: " ".into() };
        let v = bank.validate(&scale);
        assert_eq!(v, vec![BankViolation::MissingRubric { question: "q09-1".into() }]);

        let mut bank = bundled::bank();
        bank.questions[41].subtest_index = 16;
        let v = bank.validate(&scale);
        assert!(v.contains(&BankViolation::UnknownSubtest {
            question: bank.questions[41].id.clone(),
            subtest: 16
        }));
        assert!(v.iter().any(|x| x.to_string().contains("unknown subtest")));
    }

    #[test]
    fn multilingual_prompts_survive_round_trip() {
        let bank = bundled::bank();
        let q = bank.question("q05-1").unwrap();
        assert!(q.prompt.contains("力量"));
        let again = QuestionBank::from_json(&bank.to_json()).unwrap();
        assert_eq!(again, bank);
    }

    #[test]
    fn replacement_question_is_marked() {
        let bank = bundled::bank();
        let flagged: Vec<&str> = bank
            .questions
            .iter()
            .filter(|q| q.nonoriginal)
            .map(|q| q.id.as_str())
            .collect();
        assert_eq!(flagged, vec!["q12-3"]);
    }
}
