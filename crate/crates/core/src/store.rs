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

//! File-backed results store.
//!
//! Layout under the store root:
//!
//! ```text
//! scales/<id>.json            scale definitions
//! banks/<id>.json             question banks
//! sessions/<id>.json          live session state, transcript included
//! verdicts/<session>/<question>/<seq>.json   append-only verdict history
//! reports/<run_id>--<subject_id>.json
//! runs/<run_id>.json
//! ```
//!
//! Every file is a JSON envelope `{"kind","id","checksum","payload"}` where
//! `checksum` is the SHA-256 of the payload bytes exactly as written.
//! Writes go to a temporary sibling, are synced, then renamed over the
//! target, so a crash leaves either the old record or the new one.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bank::QuestionBank;
use crate::grading::{AnswerId, GradingError, Verdict};
use crate::scale::{Category, Hundredths, Scale};
use crate::scoring::{rank_subjects, IqReport, Ranking, ScoringError};
use crate::session::{Session, SessionStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Scale,
    Bank,
    Session,
    Verdict,
    Report,
    Run,
    Archive,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Scale => "scale",
            Kind::Bank => "bank",
            Kind::Session => "session",
            Kind::Verdict => "verdict",
            Kind::Report => "report",
            Kind::Run => "run",
            Kind::Archive => "run_archive",
        }
    }

    fn dir(self) -> &'static str {
        match self {
            Kind::Scale => "scales",
            Kind::Bank => "banks",
            Kind::Session => "sessions",
            Kind::Verdict => "verdicts",
            Kind::Report => "reports",
            Kind::Run => "runs",
            Kind::Archive => "archives",
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{kind} `{id}` not found")]
    NotFound { kind: &'static str, id: String },
    #[error("{kind} `{id}` already exists")]
    Conflict { kind: &'static str, id: String },
    #[error("{path}: record is corrupt ({reason})")]
    Corrupt { path: PathBuf, reason: String },
    #[error("`{0}` is not a valid record id")]
    InvalidId(String),
    #[error("run `{run}` uses scale `{run_scale}`, report is for `{report_scale}`")]
    ScaleMismatch {
        run: String,
        run_scale: String,
        report_scale: String,
    },
    #[error("subject `{0}` appears in no run")]
    UnknownSubject(String),
    #[error(transparent)]
    Grading(#[from] GradingError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    kind: &'a str,
    id: &'a str,
    checksum: String,
    payload: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn<'a> {
    kind: String,
    id: String,
    checksum: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn encode<T: Serialize>(kind: Kind, id: &str, value: &T) -> Result<Vec<u8>, StoreError> {
    let payload = serde_json::to_string(value)?;
    let raw = RawValue::from_string(payload)?;
    let env = EnvelopeOut {
        kind: kind.name(),
        id,
        checksum: checksum(raw.get().as_bytes()),
        payload: &raw,
    };
    let mut bytes = serde_json::to_vec(&env)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn decode<T: DeserializeOwned>(kind: Kind, path: &Path, bytes: &[u8]) -> Result<T, StoreError> {
    let corrupt = |reason: String| StoreError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let env: EnvelopeIn = serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
    if env.kind != kind.name() {
        return Err(corrupt(format!("expected a {} record, found {}", kind.name(), env.kind)));
    }
    if checksum(env.payload.get().as_bytes()) != env.checksum {
        return Err(corrupt(format!("checksum mismatch for `{}`", env.id)));
    }
    serde_json::from_str(env.payload.get()).map_err(|e| corrupt(e.to_string()))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 200
        && !id.starts_with('.')
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

/// Writes `bytes` to `path` via a synced temporary file and a rename.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("record paths have a parent");
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = temp_path(path);
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))?;
    if let Ok(d) = fs::File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().unwrap().to_string_lossy();
    path.with_file_name(format!(".{name}.{}.tmp", uuid::Uuid::new_v4().simple()))
}

/// One longitudinal administration, e.g. the 2014 run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRun {
    pub run_id: String,
    pub label: String,
    pub scale_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank_id: Option<String>,
    pub created_at: DateTime<Utc>,
    pub report_ids: Vec<String>,
}

/// A pending or decided verdict, as stored in the append-only history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictVersion {
    pub answer_id: String,
    pub seq: u32,
    pub verdict: Verdict,
    pub recorded_at: DateTime<Utc>,
}

/// A manual-grading work item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingAnswer {
    pub answer_id: String,
    pub session_id: String,
    pub subject: String,
    pub question_id: String,
    pub prompt: String,
    pub rubric: String,
    pub answer: Option<crate::grading::AnswerPayload>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Iq,
    Category(Category),
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("iq") {
            Ok(Metric::Iq)
        } else {
            s.parse().map(Metric::Category)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub run_id: String,
    pub label: String,
    pub created_at: DateTime<Utc>,
    pub value: Hundredths,
}

/// A whole run with its reports, for moving results between stores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunArchive {
    pub run: TestRun,
    pub reports: Vec<IqReport>,
}

/// Single-writer, multi-reader handle on a store directory.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    writer: Mutex<()>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let store = Store {
            root,
            writer: Mutex::new(()),
        };
        store.sweep_temp_files();
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Serializes writers. Readers never take it.
    pub fn write_lock(&self) -> MutexGuard<'_, ()> {
        self.writer.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn sweep_temp_files(&self) {
        for entry in walk(&self.root) {
            let name = entry.file_name().map(|n| n.to_string_lossy().into_owned());
            if name.is_some_and(|n| n.starts_with('.') && n.ends_with(".tmp")) {
                let _ = fs::remove_file(entry);
            }
        }
    }

    fn path(&self, kind: Kind, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.root.join(kind.dir()).join(format!("{id}.json")))
    }

    fn read_path<T: DeserializeOwned>(&self, kind: Kind, id: &str, path: &Path) -> Result<T, StoreError> {
        match fs::read(path) {
            Ok(bytes) => decode(kind, path, &bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(StoreError::NotFound {
                kind: kind.name(),
                id: id.to_string(),
            }),
            Err(e) => Err(io_err(path)(e)),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, kind: Kind, id: &str) -> Result<T, StoreError> {
        let path = self.path(kind, id)?;
        self.read_path(kind, id, &path)
    }

    pub fn exists(&self, kind: Kind, id: &str) -> bool {
        self.path(kind, id).is_ok_and(|p| p.exists())
    }

    /// Creates a record; fails if the id is taken.
    pub fn insert<T: Serialize>(&self, kind: Kind, id: &str, value: &T) -> Result<(), StoreError> {
        let _w = self.write_lock();
        self.insert_locked(kind, id, value)
    }

    fn insert_locked<T: Serialize>(&self, kind: Kind, id: &str, value: &T) -> Result<(), StoreError> {
        let path = self.path(kind, id)?;
        if path.exists() {
            return Err(StoreError::Conflict {
                kind: kind.name(),
                id: id.to_string(),
            });
        }
        atomic_write(&path, &encode(kind, id, value)?)
    }

    /// Creates or replaces a record.
    pub fn put<T: Serialize>(&self, kind: Kind, id: &str, value: &T) -> Result<(), StoreError> {
        let _w = self.write_lock();
        self.put_locked(kind, id, value)
    }

    fn put_locked<T: Serialize>(&self, kind: Kind, id: &str, value: &T) -> Result<(), StoreError> {
        let path = self.path(kind, id)?;
        atomic_write(&path, &encode(kind, id, value)?)
    }

    /// Crash simulation: writes the first `cut` bytes of the new record to
    /// the temporary file and stops before the rename.
    #[doc(hidden)]
    pub fn put_interrupted<T: Serialize>(
        &self,
        kind: Kind,
        id: &str,
        value: &T,
        cut: usize,
    ) -> Result<PathBuf, StoreError> {
        let path = self.path(kind, id)?;
        let bytes = encode(kind, id, value)?;
        let dir = path.parent().unwrap();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let tmp = temp_path(&path);
        fs::write(&tmp, &bytes[..cut.min(bytes.len())]).map_err(io_err(&tmp))?;
        Ok(tmp)
    }

    pub fn ids(&self, kind: Kind) -> Result<Vec<String>, StoreError> {
        let dir = self.root.join(kind.dir());
        let mut out = Vec::new();
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(io_err(&dir)(e)),
        };
        for entry in entries {
            let entry = entry.map_err(io_err(&dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".json") {
                if !name.starts_with('.') {
                    out.push(id.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn save_scale(&self, scale: &Scale) -> Result<(), StoreError> {
        self.insert(Kind::Scale, &scale.id, scale)
    }

    pub fn load_scale(&self, id: &str) -> Result<Scale, StoreError> {
        self.get(Kind::Scale, id)
    }

    pub fn save_bank(&self, bank: &QuestionBank) -> Result<(), StoreError> {
        self.insert(Kind::Bank, &bank.id, bank)
    }

    pub fn load_bank(&self, id: &str) -> Result<QuestionBank, StoreError> {
        self.get(Kind::Bank, id)
    }

    pub fn save_session(&self, session: &Session) -> Result<(), StoreError> {
        self.put(Kind::Session, session.id(), session)
    }

    pub fn load_session(&self, id: &str) -> Result<Session, StoreError> {
        self.get(Kind::Session, id)
    }

    pub fn sessions(&self) -> Result<Vec<Session>, StoreError> {
        self.ids(Kind::Session)?
            .iter()
            .map(|id| self.load_session(id))
            .collect()
    }

    pub fn save_report(&self, report: &IqReport) -> Result<String, StoreError> {
        let id = report.report_id();
        self.insert(Kind::Report, &id, report)?;
        Ok(id)
    }

    pub fn load_report(&self, id: &str) -> Result<IqReport, StoreError> {
        self.get(Kind::Report, id)
    }

    pub fn save_run(&self, run: &TestRun) -> Result<(), StoreError> {
        self.insert(Kind::Run, &run.run_id, run)
    }

    pub fn load_run(&self, id: &str) -> Result<TestRun, StoreError> {
        self.get(Kind::Run, id)
    }

    pub fn runs(&self) -> Result<Vec<TestRun>, StoreError> {
        let mut runs: Vec<TestRun> = self
            .ids(Kind::Run)?
            .iter()
            .map(|id| self.load_run(id))
            .collect::<Result<_, _>>()?;
        runs.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.run_id.cmp(&b.run_id)));
        Ok(runs)
    }

    pub fn latest_run(&self) -> Result<Option<TestRun>, StoreError> {
        Ok(self.runs()?.pop())
    }

    /// Creates a run holding `reports`, writing each report first.
    pub fn create_run(&self, mut run: TestRun, reports: &[IqReport]) -> Result<TestRun, StoreError> {
        let _w = self.write_lock();
        if self.path(Kind::Run, &run.run_id)?.exists() {
            return Err(StoreError::Conflict {
                kind: Kind::Run.name(),
                id: run.run_id.clone(),
            });
        }
        for r in reports {
            self.check_report_scale(&run, r)?;
        }
        for r in reports {
            let id = r.report_id();
            self.insert_locked(Kind::Report, &id, r)?;
            run.report_ids.push(id);
        }
        self.insert_locked(Kind::Run, &run.run_id, &run)?;
        Ok(run)
    }

    fn check_report_scale(&self, run: &TestRun, r: &IqReport) -> Result<(), StoreError> {
        if r.vector.scale_id != run.scale_id {
            return Err(StoreError::ScaleMismatch {
                run: run.run_id.clone(),
                run_scale: run.scale_id.clone(),
                report_scale: r.vector.scale_id.clone(),
            });
        }
        Ok(())
    }

    /// Files one more report under an existing run, creating the run if needed.
    pub fn add_report_to_run(&self, run_id: &str, label: &str, report: &IqReport) -> Result<(), StoreError> {
        let _w = self.write_lock();
        let mut run = match self.get::<TestRun>(Kind::Run, run_id) {
            Ok(run) => run,
            Err(StoreError::NotFound { .. }) => TestRun {
                run_id: run_id.to_string(),
                label: label.to_string(),
                scale_id: report.vector.scale_id.clone(),
                bank_id: None,
                created_at: report.computed_at,
                report_ids: vec![],
            },
            Err(e) => return Err(e),
        };
        self.check_report_scale(&run, report)?;
        let id = report.report_id();
        self.insert_locked(Kind::Report, &id, report)?;
        run.report_ids.push(id);
        self.put_locked(Kind::Run, run_id, &run)
    }

    pub fn run_reports(&self, run: &TestRun) -> Result<Vec<IqReport>, StoreError> {
        run.report_ids.iter().map(|id| self.load_report(id)).collect()
    }

    pub fn ranking(&self, run_id: &str) -> Result<Ranking, StoreError> {
        let run = self.load_run(run_id)?;
        Ok(rank_subjects(&run.run_id, self.run_reports(&run)?)?)
    }

    /// A subject's metric across runs, oldest run first. Runs the subject
    /// did not take part in are skipped.
    pub fn trend(&self, subject_id: &str, metric: Metric) -> Result<Vec<TrendPoint>, StoreError> {
        let mut out = Vec::new();
        for run in self.runs()? {
            for report in self.run_reports(&run)? {
                if report.subject.id == subject_id {
                    out.push(TrendPoint {
                        run_id: run.run_id.clone(),
                        label: run.label.clone(),
                        created_at: run.created_at,
                        value: match metric {
                            Metric::Iq => report.iq,
                            Metric::Category(c) => report.category(c),
                        },
                    });
                }
            }
        }
        if out.is_empty() {
            return Err(StoreError::UnknownSubject(subject_id.to_string()));
        }
        Ok(out)
    }

    fn verdict_dir(&self, answer: &AnswerId) -> Result<PathBuf, StoreError> {
        for part in [&answer.session_id, &answer.question_id] {
            if !valid_id(part) {
                return Err(StoreError::InvalidId(answer.to_string()));
            }
        }
        Ok(self
            .root
            .join(Kind::Verdict.dir())
            .join(&answer.session_id)
            .join(&answer.question_id))
    }

    /// Every stored version of an answer's verdict, oldest first.
    pub fn verdict_history(&self, answer: &AnswerId) -> Result<Vec<VerdictVersion>, StoreError> {
        let dir = self.verdict_dir(answer)?;
        let mut out = Vec::new();
        let Ok(entries) = fs::read_dir(&dir) else {
            return Ok(out);
        };
        let mut files: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && !p.file_name().unwrap().to_string_lossy().starts_with('.')
            })
            .collect();
        files.sort();
        for path in files {
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            out.push(decode(Kind::Verdict, &path, &bytes)?);
        }
        Ok(out)
    }

    fn append_verdict_locked(
        &self,
        answer: &AnswerId,
        verdict: &Verdict,
        at: DateTime<Utc>,
    ) -> Result<VerdictVersion, StoreError> {
        let seq = self.verdict_history(answer)?.len() as u32 + 1;
        let version = VerdictVersion {
            answer_id: answer.to_string(),
            seq,
            verdict: verdict.clone(),
            recorded_at: at,
        };
        let path = self.verdict_dir(answer)?.join(format!("{seq:06}.json"));
        if path.exists() {
            return Err(StoreError::Conflict {
                kind: Kind::Verdict.name(),
                id: format!("{answer}#{seq}"),
            });
        }
        atomic_write(&path, &encode(Kind::Verdict, &answer.to_string(), &version)?)?;
        Ok(version)
    }

    /// Saves a session and appends every new or changed verdict to the history.
    pub fn save_session_with_history(&self, session: &Session, at: DateTime<Utc>) -> Result<(), StoreError> {
        let _w = self.write_lock();
        for entry in &session.transcript.entries {
            let id = AnswerId::new(session.id(), &entry.question_id);
            let last = self.verdict_history(&id)?.pop();
            if last.map(|v| v.verdict) != Some(entry.verdict.clone()) {
                self.append_verdict_locked(&id, &entry.verdict, at)?;
            }
        }
        self.put_locked(Kind::Session, session.id(), session)
    }

    /// Answers waiting for a human verdict, across every stored session.
    pub fn grading_queue(&self, bank: &QuestionBank) -> Result<Vec<PendingAnswer>, StoreError> {
        let mut out = Vec::new();
        for session in self.sessions()? {
            if session.status() != SessionStatus::PendingGrading || session.transcript.bank_id != bank.id {
                continue;
            }
            for entry in session.transcript.pending_manual() {
                let Some(q) = bank.question(&entry.question_id) else { continue };
                let rubric = match &q.grading {
                    crate::bank::GradingSpec::Manual { rubric } => rubric.clone(),
                    _ => String::new(),
                };
                out.push(PendingAnswer {
                    answer_id: AnswerId::new(session.id(), &q.id).to_string(),
                    session_id: session.id().to_string(),
                    subject: session.transcript.subject.display_name.clone(),
                    question_id: q.id.clone(),
                    prompt: q.prompt.clone(),
                    rubric,
                    answer: entry.answer.raw_answer.clone(),
                });
            }
        }
        Ok(out)
    }

    /// Records a human verdict. Atomic with respect to other writers; a
    /// second verdict on the same answer fails with `not pending`.
    pub fn record_manual_verdict(
        &self,
        bank: &QuestionBank,
        answer_id: &str,
        pass: bool,
        note: &str,
        at: DateTime<Utc>,
    ) -> Result<(Verdict, Session), StoreError> {
        let id = AnswerId::parse(answer_id)?;
        let _w = self.write_lock();
        let mut session = match self.load_session(&id.session_id) {
            Ok(s) => s,
            Err(StoreError::NotFound { .. }) | Err(StoreError::InvalidId(_)) => {
                return Err(GradingError::UnknownAnswer(answer_id.to_string()).into())
            }
            Err(e) => return Err(e),
        };
        if session.transcript.entry(&id.question_id).is_none() {
            return Err(GradingError::UnknownAnswer(answer_id.to_string()).into());
        }
        let verdict = session
            .transcript
            .record_manual_verdict(bank, &id.question_id, pass, note)?;
        self.append_verdict_locked(&id, &verdict, at)?;
        self.put_locked(Kind::Session, session.id(), &session)?;
        Ok((verdict, session))
    }

    pub fn export_run(&self, run_id: &str, out: &Path) -> Result<RunArchive, StoreError> {
        let run = self.load_run(run_id)?;
        let archive = RunArchive {
            reports: self.run_reports(&run)?,
            run,
        };
        atomic_write(out, &encode(Kind::Archive, run_id, &archive)?)?;
        Ok(archive)
    }

    pub fn import_run(&self, archive_path: &Path) -> Result<TestRun, StoreError> {
        let bytes = fs::read(archive_path).map_err(io_err(archive_path))?;
        let archive: RunArchive = decode(Kind::Archive, archive_path, &bytes)?;
        let RunArchive { mut run, reports } = archive;
        run.report_ids.clear();
        self.create_run(run, &reports)
    }
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let Ok(entries) = fs::read_dir(&d) else { continue };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out
}
