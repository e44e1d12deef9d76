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

//! The `uiq` command line.
//!
//! Exit codes: 0 success, 1 validation failure (bad input, pending grading,
//! conflicting verdicts), 2 runtime error (unreadable files, I/O, network).

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adapters::{AdapterConfig, SubjectConfig};
use crate::bank::{load_bank, QuestionBank};
use crate::bundled;
use crate::clock::{Clock, ManualClock, SystemClock};
use crate::grading::DEFAULT_TIMEOUT;
use crate::mock_engine::MockEngine;
use crate::scale::{Category, Scale};
use crate::scoring::{score_matrix, score_transcript, IqReport, MatrixFile, Ranking, ScoringError};
use crate::server;
use crate::service::{self, ServiceConfig};
use crate::session::{run_session, Session, SessionError, SessionStatus, SessionTranscript};
use crate::store::{Metric, Store, StoreError, TestRun};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub output: String,
}

impl CommandResult {
    fn ok(output: String) -> Self {
        CommandResult { exit_code: 0, output }
    }
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

type Outcome = Result<String, Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn runtime(msg: impl Into<String>) -> Failure {
    Failure::Runtime(msg.into())
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound { .. }
            | StoreError::Conflict { .. }
            | StoreError::InvalidId(_)
            | StoreError::ScaleMismatch { .. }
            | StoreError::UnknownSubject(_)
            | StoreError::Grading(_)
            | StoreError::Scoring(_) => invalid(e.to_string()),
            _ => runtime(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "uiq", version, about = "Universal IQ test harness")]
pub struct Cli {
    /// Results store directory.
    #[arg(long, global = true, env = "UIQ_STORE", default_value = ".uiq")]
    pub store: PathBuf,
    /// Pin clocks and generated ids so output is byte-identical across runs.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Definitions {
    /// Scale definition file; the bundled 2014 scale if omitted.
    #[arg(long)]
    pub scale: Option<PathBuf>,
    /// Question bank file; the bundled 2014 bank if omitted.
    #[arg(long)]
    pub bank: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scale and bank for consistency.
    Validate(Definitions),
    /// Administer the bank to a machine subject.
    Run {
        /// Subject config file.
        #[arg(long)]
        subject: PathBuf,
        #[command(flatten)]
        defs: Definitions,
        /// Per-question limit in milliseconds.
        #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_millis() as u64)]
        timeout_ms: u64,
        /// Also write the transcript here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        session_id: Option<String>,
    },
    /// Score transcripts or raw score tables into a new run.
    Score {
        /// Raw score table files.
        #[arg(long, num_args = 1.., conflicts_with = "from_transcripts", required_unless_present = "from_transcripts")]
        from_matrix: Vec<PathBuf>,
        /// Transcript files or stored session ids.
        #[arg(long, num_args = 1..)]
        from_transcripts: Vec<String>,
        #[command(flatten)]
        defs: Definitions,
        #[arg(long)]
        run: Option<String>,
        #[arg(long)]
        label: Option<String>,
    },
    /// Print a run's leaderboard.
    Rank {
        /// Run id; the most recent run if omitted.
        #[arg(long)]
        run: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Print the report of a stored session.
    Report {
        #[arg(long)]
        session: String,
        #[command(flatten)]
        defs: Definitions,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Work the manual grading queue.
    Grade {
        #[command(subcommand)]
        action: GradeAction,
    },
    /// A subject's score across runs.
    Trend {
        #[arg(long)]
        subject: String,
        /// `iq` or a category name.
        #[arg(long, default_value = "iq")]
        metric: String,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Serve the session, grading and leaderboard API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[command(flatten)]
        defs: Definitions,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_millis() as u64)]
        timeout_ms: u64,
        /// Run that completed live sessions are filed under.
        #[arg(long)]
        run: Option<String>,
        /// Static files for the browser interface.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
    /// Write a run and its reports to a single archive file.
    Export {
        #[arg(long)]
        run: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a run archive into the store.
    Import { archive: PathBuf },
    /// Serve the offline search engine used by the tests.
    MockEngine {
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        #[arg(long, default_value_t = 8081)]
        port: u16,
    },
}

#[derive(Debug, Subcommand)]
pub enum GradeAction {
    /// List answers waiting for a verdict.
    Queue {
        #[command(flatten)]
        defs: Definitions,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Record a verdict on one answer (`<session>:<question>`).
    Verdict {
        answer_id: String,
        #[arg(long, conflicts_with = "fail", required_unless_present = "fail")]
        pass: bool,
        #[arg(long)]
        fail: bool,
        #[arg(long, default_value = "")]
        note: String,
        #[command(flatten)]
        defs: Definitions,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return CommandResult {
                exit_code: code,
                output: e.render().to_string(),
            };
        }
    };
    execute(cli)
}

pub fn execute(cli: Cli) -> CommandResult {
    let ctx = Context::new(&cli);
    let outcome = match cli.command {
        Command::Validate(defs) => cmd_validate(&defs),
        Command::Run {
            subject,
            defs,
            timeout_ms,
            out,
            session_id,
        } => ctx.cmd_run(&subject, &defs, timeout_ms, out.as_deref(), session_id),
        Command::Score {
            from_matrix,
            from_transcripts,
            defs,
            run,
            label,
        } => ctx.cmd_score(&from_matrix, &from_transcripts, &defs, run, label),
        Command::Rank { run, format } => ctx.cmd_rank(run, format),
        Command::Report { session, defs, format } => ctx.cmd_report(&session, &defs, format),
        Command::Grade { action } => ctx.cmd_grade(action),
        Command::Trend {
            subject,
            metric,
            format,
        } => ctx.cmd_trend(&subject, &metric, format),
        Command::Serve {
            bind,
            port,
            defs,
            timeout_ms,
            run,
            ui_dir,
        } => ctx.cmd_serve(&bind, port, &defs, timeout_ms, run, ui_dir),
        Command::Export { run, out } => ctx.open().and_then(|s| {
            let archive = s.export_run(&run, &out)?;
            Ok(format!(
                "exported run {} ({} reports) to {}\n",
                archive.run.run_id,
                archive.reports.len(),
                out.display()
            ))
        }),
        Command::Import { archive } => ctx.open().and_then(|s| {
            let run = s.import_run(&archive)?;
            Ok(format!("imported run {} ({} reports)\n", run.run_id, run.report_ids.len()))
        }),
        Command::MockEngine { bind, port } => parse_addr(&bind, port).and_then(|addr| {
            server::serve_blocking(MockEngine::with_defaults().router(), addr, |a| {
                println!("mock engine on http://{a}/search?q={{QUERY}}");
            })
            .map(|_| String::new())
            .map_err(|e| runtime(e.to_string()))
        }),
    };
    match outcome {
        Ok(output) => CommandResult::ok(output),
        Err(Failure::Invalid(msg)) => CommandResult {
            exit_code: 1,
            output: ensure_newline(msg),
        },
        Err(Failure::Runtime(msg)) => CommandResult {
            exit_code: 2,
            output: ensure_newline(format!("error: {msg}")),
        },
    }
}

fn ensure_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn parse_addr(bind: &str, port: u16) -> Result<SocketAddr, Failure> {
    format!("{bind}:{port}")
        .parse()
        .map_err(|e| invalid(format!("bad bind address `{bind}`: {e}")))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))
}

fn load_scale(defs: &Definitions) -> Result<Scale, Failure> {
    let scale = match &defs.scale {
        None => bundled::scale(),
        Some(p) => Scale::from_json(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?,
    };
    let violations = scale.validate();
    if !violations.is_empty() {
        return Err(invalid(listing(&format!("scale {}", scale.id), &violations)));
    }
    Ok(scale)
}

fn load_definitions(defs: &Definitions) -> Result<(Scale, QuestionBank), Failure> {
    let scale = load_scale(defs)?;
    let bank = match &defs.bank {
        None => bundled::bank(),
        Some(p) => load_bank(&read(p)?, std::slice::from_ref(&scale))
            .map_err(|e| invalid(format!("{}: {e}", p.display())))?,
    };
    Ok((scale, bank))
}

fn listing<T: std::fmt::Display>(what: &str, violations: &[T]) -> String {
    let mut out = format!("{what}: {} problem(s)\n", violations.len());
    for v in violations {
        let _ = writeln!(out, "  - {v}");
    }
    out
}

fn cmd_validate(defs: &Definitions) -> Outcome {
    let scale = match &defs.scale {
        None => bundled::scale(),
        Some(p) => Scale::from_json(&read(p)?).map_err(|e| invalid(format!("{}: malformed scale: {e}", p.display())))?,
    };
    let bank = match &defs.bank {
        None => bundled::bank(),
        Some(p) => QuestionBank::from_json(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?,
    };
    let mut out = String::new();
    let mut failed = false;
    let sv = scale.validate();
    if sv.is_empty() {
        let _ = writeln!(
            out,
            "scale {}: ok ({} subtests, weights sum to {}%)",
            scale.id,
            scale.subtests.len(),
            scale.total_weight_percent()
        );
    } else {
        failed = true;
        out.push_str(&listing(&format!("scale {}", scale.id), &sv));
    }
    let bv = bank.validate(&scale);
    if bv.is_empty() {
        let _ = writeln!(
            out,
            "bank {}: ok ({} questions, {} graded manually)",
            bank.id,
            bank.questions.len(),
            bank.manual_count()
        );
    } else {
        failed = true;
        out.push_str(&listing(&format!("bank {}", bank.id), &bv));
    }
    if failed {
        Err(invalid(out))
    } else {
        Ok(out)
    }
}

struct Context {
    store_dir: PathBuf,
    deterministic: bool,
    clock: Arc<dyn Clock>,
}

impl Context {
    fn new(cli: &Cli) -> Self {
        let clock: Arc<dyn Clock> = if cli.deterministic {
            Arc::new(ManualClock::pinned())
        } else {
            Arc::new(SystemClock)
        };
        Context {
            store_dir: cli.store.clone(),
            deterministic: cli.deterministic,
            clock,
        }
    }

    fn open(&self) -> Result<Store, Failure> {
        Store::open(&self.store_dir).map_err(|e| runtime(e.to_string()))
    }

    fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    fn fresh_id(&self, prefix: &str) -> String {
        let stamp = self.now().format("%Y%m%dT%H%M%SZ");
        if self.deterministic {
            format!("{prefix}-{stamp}")
        } else {
            let tag = uuid::Uuid::new_v4().simple().to_string();
            format!("{prefix}-{stamp}-{}", &tag[..6])
        }
    }

    fn cmd_run(
        &self,
        subject: &Path,
        defs: &Definitions,
        timeout_ms: u64,
        out: Option<&Path>,
        session_id: Option<String>,
    ) -> Outcome {
        let text = read(subject)?;
        let config = SubjectConfig::from_json(&text).map_err(|e| invalid(format!("{}: {e}", subject.display())))?;
        if matches!(config.adapter, AdapterConfig::Human(_)) {
            return Err(invalid("human subjects take the test through `uiq serve`"));
        }
        let (scale, bank) = load_definitions(defs)?;
        let adapter = config.build().map_err(|e| invalid(e.to_string()))?;
        let session_id = session_id.unwrap_or_else(|| self.fresh_id(&config.subject.id));
        let timeout = Duration::from_millis(timeout_ms);

        let (mut transcript, fatal) =
            match run_session(adapter.as_ref(), &bank, &scale, timeout, self.clock.as_ref(), &session_id) {
                Ok(t) => (t, None),
                Err(SessionError::AdapterFatal { reason, transcript }) => (*transcript, Some(reason)),
                Err(e @ SessionError::InvalidPairing { .. }) => return Err(invalid(e.to_string())),
                Err(e) => return Err(runtime(e.to_string())),
            };
        if let AdapterConfig::Scripted(sc) = &config.adapter {
            sc.apply_manual_verdicts(&mut transcript, &bank)
                .map_err(|e| runtime(e.to_string()))?;
        }

        let store = self.open()?;
        let session = Session {
            transcript,
            dispatched_at: None,
            timeout_ms,
            run_id: None,
        };
        store.save_session_with_history(&session, self.now())?;
        let t = &session.transcript;
        if let Some(path) = out {
            let json = serde_json::to_string_pretty(t).expect("transcript serializes");
            std::fs::write(path, json + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        }

        let count = |pred: fn(&crate::grading::VerdictState) -> bool| {
            t.entries.iter().filter(|e| pred(&e.verdict.state)).count()
        };
        use crate::grading::VerdictState as V;
        let mut msg = format!("session {} ({})\n", t.session_id, t.subject.display_name);
        let _ = writeln!(
            msg,
            "  {} questions: {} correct, {} incorrect, {} timed out, {} undeliverable",
            t.entries.len(),
            count(|s| *s == V::Correct),
            count(|s| *s == V::Incorrect),
            count(|s| *s == V::Timeout),
            count(|s| *s == V::Undeliverable),
        );
        let pending = t.pending_manual().count();
        let _ = writeln!(msg, "  pending manual grading: {pending}");
        let _ = writeln!(msg, "  status: {}", t.status);
        if let Some(path) = out {
            let _ = writeln!(msg, "  transcript: {}", path.display());
        }
        if let Some(reason) = fatal {
            return Err(runtime(format!("{msg}  adapter failed: {reason}")));
        }
        Ok(msg)
    }

    fn cmd_score(
        &self,
        matrices: &[PathBuf],
        transcripts: &[String],
        defs: &Definitions,
        run: Option<String>,
        label: Option<String>,
    ) -> Outcome {
        let store = self.open()?;
        let at = self.now();
        let run_id = run.unwrap_or_else(|| self.fresh_id("run"));
        let (scale, reports, bank_id) = if !matrices.is_empty() {
            let scale = load_scale(defs)?;
            let mut rows = Vec::new();
            for p in matrices {
                let m = MatrixFile::from_json(&read(p)?).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
                if m.scale_id != scale.id {
                    return Err(invalid(format!(
                        "{}: table is for scale `{}`, not `{}`",
                        p.display(),
                        m.scale_id,
                        scale.id
                    )));
                }
                rows.extend(m.into_rows());
            }
            let reports = score_matrix(rows, &scale, &run_id, at).map_err(|e| invalid(e.to_string()))?;
            (scale, reports, None)
        } else {
            let (scale, bank) = load_definitions(defs)?;
            let mut reports = Vec::new();
            let mut blocked = Vec::new();
            for source in transcripts {
                let t = self.transcript(&store, source)?;
                match score_transcript(&t, &bank, &scale, &run_id, at) {
                    Ok(r) => reports.push(r),
                    Err(ScoringError::NotComplete { session, status }) => blocked.push(format!(
                        "  {session}: {status}, {} answer(s) awaiting a verdict",
                        t.pending_manual().count()
                    )),
                    Err(e) => return Err(invalid(format!("{source}: {e}"))),
                }
            }
            if !blocked.is_empty() {
                return Err(invalid(format!(
                    "cannot score, grading is not finished for:\n{}",
                    blocked.join("\n")
                )));
            }
            (scale, reports, Some(bank.id))
        };
        let run = TestRun {
            run_id: run_id.clone(),
            label: label.unwrap_or_else(|| run_id.clone()),
            scale_id: scale.id.clone(),
            bank_id,
            created_at: at,
            report_ids: vec![],
        };
        let run = store.create_run(run, &reports)?;
        Ok(format!("run {}: scored {} subject(s)\n", run.run_id, run.report_ids.len()))
    }

    fn transcript(&self, store: &Store, source: &str) -> Result<SessionTranscript, Failure> {
        let path = Path::new(source);
        if path.is_file() {
            return serde_json::from_str(&read(path)?)
                .map_err(|e| invalid(format!("{source}: not a transcript: {e}")));
        }
        Ok(store.load_session(source)?.transcript)
    }

    fn cmd_rank(&self, run: Option<String>, format: Format) -> Outcome {
        let store = self.open()?;
        let run_id = match run {
            Some(r) => r,
            None => match store.latest_run()? {
                Some(r) => r.run_id,
                None => return Err(invalid("the store holds no runs; score something first")),
            },
        };
        let ranking = store.ranking(&run_id)?;
        Ok(render_ranking(&ranking, format))
    }

    fn cmd_report(&self, session_id: &str, defs: &Definitions, format: Format) -> Outcome {
        let store = self.open()?;
        let (scale, bank) = load_definitions(defs)?;
        let session = store.load_session(session_id)?;
        let t = &session.transcript;
        if t.status != SessionStatus::Complete {
            return Err(invalid(format!(
                "session {session_id} is {}; {} answer(s) await a verdict",
                t.status,
                t.pending_manual().count()
            )));
        }
        let run_id = session.run_id.clone().unwrap_or_else(|| "adhoc".into());
        let report = score_transcript(t, &bank, &scale, &run_id, self.now()).map_err(|e| invalid(e.to_string()))?;
        Ok(render_report(&report, &scale, format))
    }

    fn cmd_grade(&self, action: GradeAction) -> Outcome {
        let store = self.open()?;
        match action {
            GradeAction::Queue { defs, format } => {
                let (_, bank) = load_definitions(&defs)?;
                let queue = store.grading_queue(&bank)?;
                Ok(match format {
                    Format::Json => serde_json::to_string_pretty(&queue).expect("queue serializes") + "\n",
                    Format::Csv => {
                        let mut out = String::from("answer_id,subject,question_id,answer\n");
                        for p in &queue {
                            let _ = writeln!(
                                out,
                                "{},{},{},{}",
                                p.answer_id,
                                csv(&p.subject),
                                p.question_id,
                                csv(&answer_text(&p.answer))
                            );
                        }
                        out
                    }
                    Format::Table => {
                        if queue.is_empty() {
                            return Ok("nothing to grade\n".into());
                        }
                        let mut out = String::new();
                        for p in &queue {
                            let _ = writeln!(out, "{}  [{}]", p.answer_id, p.subject);
                            let _ = writeln!(out, "  question: {}", p.prompt);
                            let _ = writeln!(out, "  rubric:   {}", p.rubric);
                            let _ = writeln!(out, "  answer:   {}", answer_text(&p.answer));
                        }
                        out
                    }
                })
            }
            GradeAction::Verdict {
                answer_id,
                pass,
                fail: _,
                note,
                defs,
            } => {
                let (_, bank) = load_definitions(&defs)?;
                let (verdict, session) = store.record_manual_verdict(&bank, &answer_id, pass, &note, self.now())?;
                Ok(format!(
                    "{answer_id}: {}\nsession {} is {}\n",
                    serde_json::to_value(verdict.state).expect("state serializes").as_str().unwrap_or("?"),
                    session.id(),
                    session.status()
                ))
            }
        }
    }

    fn cmd_trend(&self, subject: &str, metric: &str, format: Format) -> Outcome {
        let metric: Metric = metric.parse().map_err(|e: String| invalid(e))?;
        let store = self.open()?;
        let points = store.trend(subject, metric)?;
        Ok(match format {
            Format::Json => serde_json::to_string_pretty(&points).expect("trend serializes") + "\n",
            Format::Csv => {
                let mut out = String::from("run_id,label,created_at,value\n");
                for p in &points {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        p.run_id,
                        csv(&p.label),
                        p.created_at.to_rfc3339(),
                        p.value
                    );
                }
                out
            }
            Format::Table => {
                let mut out = String::new();
                for p in &points {
                    let _ = writeln!(out, "{}  {:<24} {:>6}", p.created_at.format("%Y-%m-%d"), p.label, p.value.to_string());
                }
                out
            }
        })
    }

    fn cmd_serve(
        &self,
        bind: &str,
        port: u16,
        defs: &Definitions,
        timeout_ms: u64,
        run: Option<String>,
        ui_dir: Option<PathBuf>,
    ) -> Outcome {
        let addr = parse_addr(bind, port)?;
        let (scale, bank) = load_definitions(defs)?;
        let store = self.open()?;
        let router = service::router(ServiceConfig {
            store,
            bank,
            scale,
            clock: self.clock.clone(),
            timeout: Duration::from_millis(timeout_ms),
            default_run: run,
            ui_dir,
        });
        server::serve_blocking(router, addr, |a| println!("serving on http://{a}"))
            .map_err(|e| runtime(e.to_string()))?;
        Ok(String::new())
    }
}

fn csv(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn answer_text(a: &Option<crate::grading::AnswerPayload>) -> String {
    use crate::grading::AnswerPayload;
    match a {
        None => "(no answer)".into(),
        Some(AnswerPayload::Text(t)) => t.clone(),
        Some(AnswerPayload::Asset(p)) => format!("(file) {p}"),
    }
}

pub fn render_ranking(ranking: &Ranking, format: Format) -> String {
    match format {
        Format::Table => ranking.to_table(),
        Format::Csv => ranking.to_csv(),
        Format::Json => serde_json::to_string_pretty(ranking).expect("ranking serializes") + "\n",
    }
}

fn render_report(report: &IqReport, scale: &Scale, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Csv => {
            let mut out = String::from("subject,iq");
            for c in Category::ALL {
                let _ = write!(out, ",cat_{}", c.key());
            }
            out.push('\n');
            let _ = write!(out, "{},{}", csv(&report.subject.display_name), report.iq);
            for c in Category::ALL {
                let _ = write!(out, ",{}", report.category(c));
            }
            out.push('\n');
            out
        }
        Format::Table => {
            let mut out = format!("{} ({})\n", report.subject.display_name, report.subject.id);
            for (st, v) in scale.subtests.iter().zip(&report.vector.values) {
                let _ = writeln!(out, "  {:>2}. {:<40} {:>3}", st.index, st.name, v);
            }
            let maxima = scale.category_maxima();
            for c in Category::ALL {
                let _ = writeln!(
                    out,
                    "  {:<40}     {:>6} / {}",
                    c.label(),
                    report.category(c).to_string(),
                    maxima.get(&c).copied().unwrap_or_default()
                );
            }
            let _ = writeln!(out, "  General IQ {}", report.iq);
            out
        }
    }
}
