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

//! From graded transcripts or raw score tables to reports and leaderboards.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bank::{Modality, QuestionBank};
use crate::grading::{self, GradingError, Verdict};
use crate::scale::{Category, Hundredths, Scale, ScoreError, SubTestScoreVector};
use crate::session::{SessionStatus, SessionTranscript, SubjectDescriptor, SubjectKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IqReport {
    pub subject: SubjectDescriptor,
    pub vector: SubTestScoreVector,
    pub iq: Hundredths,
    pub categories: BTreeMap<Category, Hundredths>,
    pub run_id: String,
    pub computed_at: DateTime<Utc>,
}

impl IqReport {
    pub fn category(&self, c: Category) -> Hundredths {
        self.categories.get(&c).copied().unwrap_or_default()
    }

    /// Store key: `<run_id>--<subject_id>`.
    pub fn report_id(&self) -> String {
        format!("{}--{}", self.run_id, self.subject.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub report: IqReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub run_id: String,
    pub entries: Vec<RankedEntry>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("session `{session}` is {status}, not complete")]
    NotComplete { session: String, status: SessionStatus },
    #[error("session `{0}` does not answer every bank question")]
    Incomplete(String),
    #[error("transcript is for bank `{found}`, expected `{expected}`")]
    WrongBank { expected: String, found: String },
    #[error("reports mix scales `{0}` and `{1}`")]
    MixedScales(String, String),
    #[error("subject `{subject}`: {source}")]
    InvalidVector { subject: String, source: ScoreError },
    #[error(transparent)]
    Grading(#[from] GradingError),
}

fn report(
    subject: SubjectDescriptor,
    vector: SubTestScoreVector,
    scale: &Scale,
    run_id: &str,
    at: DateTime<Utc>,
) -> Result<IqReport, ScoringError> {
    let wrap = |source| ScoringError::InvalidVector {
        subject: subject.id.clone(),
        source,
    };
    let iq = scale.compute_iq(&vector).map_err(wrap)?;
    let categories = scale.category_breakdown(&vector).map_err(wrap)?;
    Ok(IqReport {
        subject,
        vector,
        iq,
        categories,
        run_id: run_id.to_string(),
        computed_at: at,
    })
}

/// The per-subtest score vector of a fully graded transcript.
pub fn transcript_vector(
    transcript: &SessionTranscript,
    bank: &QuestionBank,
    scale: &Scale,
) -> Result<SubTestScoreVector, ScoringError> {
    if transcript.bank_id != bank.id {
        return Err(ScoringError::WrongBank {
            expected: bank.id.clone(),
            found: transcript.bank_id.clone(),
        });
    }
    if transcript.status != SessionStatus::Complete {
        return Err(ScoringError::NotComplete {
            session: transcript.session_id.clone(),
            status: transcript.status,
        });
    }
    let by_question: BTreeMap<&str, &Verdict> = transcript
        .entries
        .iter()
        .map(|e| (e.question_id.as_str(), &e.verdict))
        .collect();
    let mut values = Vec::with_capacity(scale.subtests.len());
    for st in &scale.subtests {
        let verdicts = bank
            .questions
            .iter()
            .filter(|q| q.subtest_index == st.index)
            .map(|q| by_question.get(q.id.as_str()).copied())
            .collect::<Option<Vec<&Verdict>>>()
            .ok_or_else(|| ScoringError::Incomplete(transcript.session_id.clone()))?;
        values.push(grading::subtest_score(st, &verdicts)?);
    }
    Ok(SubTestScoreVector::new(scale.id.clone(), values))
}

pub fn score_transcript(
    transcript: &SessionTranscript,
    bank: &QuestionBank,
    scale: &Scale,
    run_id: &str,
    at: DateTime<Utc>,
) -> Result<IqReport, ScoringError> {
    let vector = transcript_vector(transcript, bank, scale)?;
    report(transcript.subject.clone(), vector, scale, run_id, at)
}

/// Scores published raw vectors directly, without running any session.
pub fn score_matrix(
    rows: Vec<(SubjectDescriptor, SubTestScoreVector)>,
    scale: &Scale,
    run_id: &str,
    at: DateTime<Utc>,
) -> Result<Vec<IqReport>, ScoringError> {
    rows.into_iter()
        .map(|(subject, vector)| report(subject, vector, scale, run_id, at))
        .collect()
}

/// Highest IQ first; ties by case-folded display name, then subject id.
pub fn rank_subjects(run_id: &str, mut reports: Vec<IqReport>) -> Result<Ranking, ScoringError> {
    if let Some(first) = reports.first() {
        let scale_id = first.vector.scale_id.clone();
        if let Some(other) = reports.iter().find(|r| r.vector.scale_id != scale_id) {
            return Err(ScoringError::MixedScales(scale_id, other.vector.scale_id.clone()));
        }
    }
    reports.sort_by(|a, b| {
        b.iq.cmp(&a.iq)
            .then_with(|| {
                a.subject
                    .display_name
                    .to_lowercase()
                    .cmp(&b.subject.display_name.to_lowercase())
            })
            .then_with(|| a.subject.id.cmp(&b.subject.id))
    });
    Ok(Ranking {
        run_id: run_id.to_string(),
        entries: reports
            .into_iter()
            .enumerate()
            .map(|(i, report)| RankedEntry { rank: i + 1, report })
            .collect(),
    })
}

impl Ranking {
    pub fn reports(&self) -> impl Iterator<Item = &IqReport> {
        self.entries.iter().map(|e| &e.report)
    }

    pub const CSV_HEADER: &'static str =
        "rank,name,group,iq,cat_acquisition,cat_mastery,cat_innovation,cat_feedback";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            let r = &e.report;
            let mut row = vec![
                e.rank.to_string(),
                csv_field(&r.subject.display_name),
                csv_field(r.subject.group.as_deref().unwrap_or("")),
                r.iq.to_string(),
            ];
            row.extend(Category::ALL.iter().map(|&c| r.category(c).to_string()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Plain-text table in the published column order: rank, region, group, name, IQ.
    pub fn to_table(&self) -> String {
        let rows: Vec<[String; 5]> = self
            .entries
            .iter()
            .map(|e| {
                let s = &e.report.subject;
                [
                    e.rank.to_string(),
                    s.region.clone().unwrap_or_default(),
                    s.group.clone().unwrap_or_default(),
                    s.display_name.clone(),
                    e.report.iq.to_string(),
                ]
            })
            .collect();
        let header = ["Rank", "Region", "Group", "Name", "General IQ"];
        let mut widths = header.map(|h| h.chars().count());
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: [&str; 5]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
                let pad = w - cell.chars().count();
                if i == 0 || i == 4 {
                    s.push_str(&" ".repeat(pad));
                    s.push_str(cell);
                } else {
                    s.push_str(cell);
                    s.push_str(&" ".repeat(pad));
                }
                if i < 4 {
                    s.push_str("  ");
                }
            }
            s.trim_end().to_string()
        };
        let mut out = line(header);
        out.push('\n');
        for row in &rows {
            out.push_str(&line(row.each_ref().map(String::as_str)));
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A published raw-score table (one row per subject).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixFile {
    #[serde(default)]
    pub table: String,
    pub scale_id: String,
    pub rows: Vec<MatrixRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub id: String,
    pub continent: String,
    pub country: String,
    pub name: String,
    pub kind: SubjectKind,
    pub values: Vec<u32>,
}

impl MatrixFile {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn into_rows(self) -> Vec<(SubjectDescriptor, SubTestScoreVector)> {
        let scale_id = self.scale_id;
        self.rows
            .into_iter()
            .map(|r| {
                let capabilities: BTreeSet<Modality> = match r.kind {
                    SubjectKind::Human => Modality::ALL.into_iter().collect(),
                    _ => BTreeSet::from([Modality::Text]),
                };
                (
                    SubjectDescriptor {
                        id: r.id,
                        display_name: r.name,
                        kind: r.kind,
                        group: Some(r.country),
                        region: Some(r.continent),
                        capabilities,
                    },
                    SubTestScoreVector::new(scale_id.clone(), r.values),
                )
            })
            .collect()
    }
}
