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

//! Weighted subtest scale and the General IQ aggregation.
//!
//! Weights are integer percents and subtest scores are integers in `0..=100`,
//! so a weighted sum expressed in hundredths of an IQ point is an exact
//! integer: `Σ score × weight_percent`. Nothing in this module touches floats.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The four first-class indices of the scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Acquisition,
    Mastery,
    Innovation,
    Feedback,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Acquisition,
        Category::Mastery,
        Category::Innovation,
        Category::Feedback,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::Acquisition => "Ability of knowledge acquisition",
            Category::Mastery => "Ability of mastery of knowledge",
            Category::Innovation => "Ability of knowledge innovation",
            Category::Feedback => "Ability of feedback of knowledge",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Category::Acquisition => "acquisition",
            Category::Mastery => "mastery",
            Category::Innovation => "innovation",
            Category::Feedback => "feedback",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.key().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

/// A fixed-point decimal counted in hundredths.
///
/// Serialized as a JSON number (`26.5`). Every value the scale can produce is
/// a multiple of 0.25 and therefore exactly representable in binary, but
/// deserialization still rejects inputs with more than two decimal places.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Hundredths(pub i64);

impl Hundredths {
    pub const ZERO: Hundredths = Hundredths(0);

    pub fn from_units(units: i64) -> Self {
        Hundredths(units * 100)
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    /// Parses a plain decimal literal such as `26.5`, `-3` or `15.75`.
    pub fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let whole: i64 = int.parse().ok()?;
        let mut cents: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
        if frac.len() == 1 {
            cents *= 10;
        }
        let v = whole.checked_mul(100)?.checked_add(cents)?;
        Some(Hundredths(if neg { -v } else { v }))
    }

    /// Two fixed decimals, e.g. `26.50`.
    pub fn fixed2(self) -> String {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        format!("{sign}{}.{:02}", a / 100, a % 100)
    }
}

/// Shortest exact rendering: `97`, `84.5`, `15.75`.
impl fmt::Display for Hundredths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        let (whole, frac) = (a / 100, a % 100);
        match frac {
            0 => write!(f, "{sign}{whole}"),
            f2 if f2 % 10 == 0 => write!(f, "{sign}{whole}.{}", f2 / 10),
            f2 => write!(f, "{sign}{whole}.{f2:02}"),
        }
    }
}

impl std::ops::Add for Hundredths {
    type Output = Hundredths;
    fn add(self, rhs: Self) -> Self {
        Hundredths(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Hundredths {
    fn sum<I: Iterator<Item = Hundredths>>(iter: I) -> Self {
        iter.fold(Hundredths::ZERO, |a, b| a + b)
    }
}

impl Serialize for Hundredths {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n: serde_json::Number = self
            .to_string()
            .parse()
            .map_err(serde::ser::Error::custom)?;
        n.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Hundredths {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let n = serde_json::Number::deserialize(deserializer)?;
        let text = n.to_string();
        // serde_json renders whole floats as `97.0`; exponents are rejected.
        Hundredths::parse_decimal(text.strip_suffix(".0").unwrap_or(&text))
            .ok_or_else(|| serde::de::Error::custom(format!("`{text}` is not a two-place decimal")))
    }
}

/// One second-class index of the scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTestDef {
    pub index: u32,
    pub name: String,
    pub category: Category,
    pub weight_percent: u32,
    pub question_count: u32,
    #[serde(default)]
    pub description: String,
}

impl SubTestDef {
    /// Points a single correct answer earns toward this subtest's score.
    pub fn points_per_question(&self) -> u32 {
        100 / self.question_count.max(1)
    }

    /// Whether `value` is a reachable score for this subtest.
    pub fn admits(&self, value: u32) -> bool {
        let step = self.points_per_question();
        step > 0 && value <= 100 && value % step == 0 && value / step <= self.question_count
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub id: String,
    pub version: String,
    pub subtests: Vec<SubTestDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTestScoreVector {
    pub scale_id: String,
    pub values: Vec<u32>,
}

impl SubTestScoreVector {
    pub fn new(scale_id: impl Into<String>, values: Vec<u32>) -> Self {
        SubTestScoreVector {
            scale_id: scale_id.into(),
            values,
        }
    }
}

/// A single broken scale invariant. Violations are data, not failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleViolation {
    Empty,
    WeightSum { total_percent: u32 },
    ZeroWeight { index: u32 },
    DuplicateIndex { index: u32 },
    IndexGap { expected: u32, found: u32 },
    OutOfOrder { index: u32 },
    BadQuestionCount { index: u32, count: u32 },
    MissingCategory { category: Category },
}

impl fmt::Display for ScaleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleViolation::Empty => write!(f, "scale has no subtests"),
            ScaleViolation::WeightSum { total_percent } => {
                write!(f, "weights sum ≠ 100 (got {total_percent}%)")
            }
            ScaleViolation::ZeroWeight { index } => write!(f, "subtest {index}: weight must be > 0"),
            ScaleViolation::DuplicateIndex { index } => {
                write!(f, "duplicate subtest index {index}")
            }
            ScaleViolation::IndexGap { expected, found } => {
                write!(f, "subtest indices must run 1..n: expected {expected}, found {found}")
            }
            ScaleViolation::OutOfOrder { index } => {
                write!(f, "subtest {index} is out of ascending index order")
            }
            ScaleViolation::BadQuestionCount { index, count } => write!(
                f,
                "subtest {index}: question_count {count} must be ≥ 1 and divide 100"
            ),
            ScaleViolation::MissingCategory { category } => {
                write!(f, "category `{category}` has no subtests")
            }
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("score vector is for scale `{found}` but the scale is `{expected}`")]
    ScaleMismatch { expected: String, found: String },
    #[error("score vector has {found} values, scale has {expected} subtests")]
    Length { expected: usize, found: usize },
    #[error("subtest {index}: score {value} is not reachable")]
    Unreachable { index: u32, value: u32 },
}

impl Scale {
    pub fn from_json(text: &str) -> Result<Scale, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn subtest(&self, index: u32) -> Option<&SubTestDef> {
        self.subtests.iter().find(|s| s.index == index)
    }

    pub fn total_weight_percent(&self) -> u32 {
        self.subtests.iter().map(|s| s.weight_percent).sum()
    }

    pub fn total_questions(&self) -> u32 {
        self.subtests.iter().map(|s| s.question_count).sum()
    }

    /// Checks every structural invariant and returns all violations found.
    pub fn validate(&self) -> Vec<ScaleViolation> {
        let mut out = Vec::new();
        if self.subtests.is_empty() {
            out.push(ScaleViolation::Empty);
            return out;
        }
        let total = self.total_weight_percent();
        if total != 100 {
            out.push(ScaleViolation::WeightSum { total_percent: total });
        }

        let mut seen = BTreeSet::new();
        let mut prev = 0;
        for st in &self.subtests {
            if st.weight_percent == 0 {
                out.push(ScaleViolation::ZeroWeight { index: st.index });
            }
            if !seen.insert(st.index) {
                out.push(ScaleViolation::DuplicateIndex { index: st.index });
            } else if st.index < prev {
                out.push(ScaleViolation::OutOfOrder { index: st.index });
            }
            prev = prev.max(st.index);
            if st.question_count == 0 || 100 % st.question_count != 0 {
                out.push(ScaleViolation::BadQuestionCount {
                    index: st.index,
                    count: st.question_count,
                });
            }
        }
        for (expected, found) in (1..).zip(seen.iter().copied()) {
            if expected != found {
                out.push(ScaleViolation::IndexGap { expected, found });
                break;
            }
        }
        for category in Category::ALL {
            if !self.subtests.iter().any(|s| s.category == category) {
                out.push(ScaleViolation::MissingCategory { category });
            }
        }
        out
    }

    fn check_vector(&self, scores: &SubTestScoreVector) -> Result<(), ScoreError> {
        if scores.scale_id != self.id {
            return Err(ScoreError::ScaleMismatch {
                expected: self.id.clone(),
                found: scores.scale_id.clone(),
            });
        }
        if scores.values.len() != self.subtests.len() {
            return Err(ScoreError::Length {
                expected: self.subtests.len(),
                found: scores.values.len(),
            });
        }
        for (st, &value) in self.subtests.iter().zip(&scores.values) {
            if !st.admits(value) {
                return Err(ScoreError::Unreachable {
                    index: st.index,
                    value,
                });
            }
        }
        Ok(())
    }

    /// General IQ: `Σ score_i × weight_i`, exact.
    pub fn compute_iq(&self, scores: &SubTestScoreVector) -> Result<Hundredths, ScoreError> {
        self.check_vector(scores)?;
        Ok(self
            .subtests
            .iter()
            .zip(&scores.values)
            .map(|(st, &v)| Hundredths(i64::from(v) * i64::from(st.weight_percent)))
            .sum())
    }

    /// Per-category contributions; they add up to [`Scale::compute_iq`].
    pub fn category_breakdown(
        &self,
        scores: &SubTestScoreVector,
    ) -> Result<BTreeMap<Category, Hundredths>, ScoreError> {
        self.check_vector(scores)?;
        let mut out: BTreeMap<Category, Hundredths> =
            Category::ALL.into_iter().map(|c| (c, Hundredths::ZERO)).collect();
        for (st, &v) in self.subtests.iter().zip(&scores.values) {
            let slot = out.entry(st.category).or_default();
            *slot = *slot + Hundredths(i64::from(v) * i64::from(st.weight_percent));
        }
        Ok(out)
    }

    /// Maximum contribution each category can make.
    pub fn category_maxima(&self) -> BTreeMap<Category, Hundredths> {
        let mut out = BTreeMap::new();
        for st in &self.subtests {
            let slot = out.entry(st.category).or_insert(Hundredths::ZERO);
            *slot = *slot + Hundredths::from_units(i64::from(st.weight_percent));
        }
        out
    }
}

pub fn validate_scale(scale: &Scale) -> Vec<ScaleViolation> {
    scale.validate()
}

pub fn compute_iq(scale: &Scale, scores: &SubTestScoreVector) -> Result<Hundredths, ScoreError> {
    scale.compute_iq(scores)
}

pub fn category_breakdown(
    scale: &Scale,
    scores: &SubTestScoreVector,
) -> Result<BTreeMap<Category, Hundredths>, ScoreError> {
    scale.category_breakdown(scores)
}
