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

//! JSON API over a results store: live sessions, the grading queue and
//! leaderboards. Server timestamps decide elapsed time.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bank::{Modality, QuestionBank};
use crate::clock::Clock;
use crate::grading::{AnswerPayload, GradingError, VerdictState};
use crate::scale::{Category, Hundredths, Scale};
use crate::scoring::{score_transcript, IqReport, ScoringError};
use crate::session::{Next, Session, SessionError, SessionStatus, SubjectDescriptor, SubjectKind};
use crate::store::{Store, StoreError};

pub struct ServiceConfig {
    pub store: Store,
    pub bank: QuestionBank,
    pub scale: Scale,
    pub clock: Arc<dyn Clock>,
    pub timeout: Duration,
    /// Run that completed live sessions are filed under, unless the
    /// session names its own.
    pub default_run: Option<String>,
    pub ui_dir: Option<PathBuf>,
}

struct AppState {
    cfg: ServiceConfig,
    /// Serializes read-modify-write cycles on sessions.
    sessions: Mutex<()>,
}

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match &e {
            StoreError::NotFound { .. } | StoreError::UnknownSubject(_) => StatusCode::NOT_FOUND,
            StoreError::InvalidId(_) => StatusCode::NOT_FOUND,
            StoreError::Conflict { .. } => StatusCode::CONFLICT,
            StoreError::Grading(g) => return grading_error(g),
            StoreError::ScaleMismatch { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

fn grading_error(e: &GradingError) -> ApiError {
    let status = match e {
        GradingError::UnknownAnswer(_) => StatusCode::NOT_FOUND,
        GradingError::NotPending(_) => StatusCode::CONFLICT,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    };
    ApiError::new(status, e.to_string())
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::OutOfOrder { .. }
            | SessionError::Duplicate(_)
            | SessionError::NotDispatched(_)
            | SessionError::Closed(_) => StatusCode::CONFLICT,
            SessionError::UnknownQuestion(_) => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Grading(g) => return grading_error(g),
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(cfg: ServiceConfig) -> Router {
    let ui_dir = cfg.ui_dir.clone();
    let state = Arc::new(AppState {
        cfg,
        sessions: Mutex::new(()),
    });
    let api = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/:id/next", get(next_question))
        .route("/api/sessions/:id/answers", post(submit_answer))
        .route("/api/sessions/:id/report", get(session_report))
        .route("/api/grading/queue", get(grading_queue))
        .route("/api/grading/:answer_id/verdict", post(post_verdict))
        .route("/api/leaderboard", get(leaderboard))
        .with_state(state);
    match ui_dir {
        Some(dir) if dir.is_dir() => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        _ => api,
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub subject_name: String,
    #[serde(default)]
    pub subject_id: Option<String>,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default)]
    pub region: Option<String>,
    #[serde(default)]
    pub run_id: Option<String>,
}

fn slug(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

async fn create_session(State(st): State<Shared>, Json(req): Json<CreateSession>) -> ApiResult<Response> {
    let name = req.subject_name.trim();
    if name.is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "subject_name is required"));
    }
    let subject_id = match req.subject_id {
        Some(id) => id,
        None => {
            let s = slug(name);
            if s.is_empty() {
                format!("human-{}", uuid::Uuid::new_v4().simple())
            } else {
                format!("human-{s}")
            }
        }
    };
    if !valid_id(&subject_id) {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid subject_id"));
    }
    let run_id = req.run_id.or_else(|| st.cfg.default_run.clone());
    if run_id.as_deref().is_some_and(|r| !valid_id(r)) {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid run_id"));
    }
    let subject = SubjectDescriptor {
        id: subject_id,
        display_name: name.to_string(),
        kind: SubjectKind::Human,
        group: req.group,
        region: req.region.or_else(|| Some("Human".into())),
        capabilities: Modality::ALL.into_iter().collect(),
    };
    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let mut session = Session::new(&session_id, subject, &st.cfg.bank, st.cfg.timeout, st.cfg.clock.as_ref());
    session.run_id = run_id;
    st.cfg.store.insert(crate::store::Kind::Session, &session_id, &session)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "session_id": session_id,
            "total": st.cfg.bank.questions.len(),
            "timeout_ms": st.cfg.timeout.as_millis() as u64,
        })),
    )
        .into_response())
}

fn load(st: &AppState, id: &str) -> ApiResult<Session> {
    let session = st.cfg.store.load_session(id)?;
    if session.transcript.bank_id != st.cfg.bank.id {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("session uses bank `{}`", session.transcript.bank_id),
        ));
    }
    Ok(session)
}

#[derive(Debug, Serialize)]
struct QuestionView {
    id: String,
    subtest: u32,
    prompt: String,
    prompt_modality: Modality,
    response_modality: Modality,
    language: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    asset: Option<String>,
}

async fn next_question(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let _guard = st.sessions.lock().unwrap();
    let mut session = load(&st, &id)?;
    let before = session.clone();
    let bank = &st.cfg.bank;
    let body = match session.next_question(bank, st.cfg.clock.as_ref())? {
        Next::Done => json!({
            "session_id": id,
            "done": true,
            "status": session.status(),
            "answered": session.transcript.entries.len(),
            "total": bank.questions.len(),
        }),
        Next::Question {
            question,
            position,
            total,
            dispatched_at,
            remaining,
        } => json!({
            "session_id": id,
            "done": false,
            "status": session.status(),
            "position": position,
            "answered": position,
            "total": total,
            "dispatched_at": dispatched_at,
            "remaining_ms": remaining.as_millis() as u64,
            "question": QuestionView {
                id: question.id.clone(),
                subtest: question.subtest_index,
                prompt: question.prompt.clone(),
                prompt_modality: question.prompt_modality,
                response_modality: question.response_modality,
                language: question.language_tag.clone(),
                asset: question.asset.clone(),
            },
        }),
    };
    if session != before {
        st.cfg.store.save_session(&session)?;
    }
    Ok(Json(body))
}

#[derive(Debug, Deserialize)]
pub struct SubmitAnswer {
    pub question_id: String,
    /// Typed answer. `null` or absent means no answer was given.
    #[serde(default)]
    pub answer: Option<String>,
    /// Reference to an uploaded audio or image answer.
    #[serde(default)]
    pub asset: Option<String>,
}

async fn submit_answer(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<SubmitAnswer>,
) -> ApiResult<Response> {
    let _guard = st.sessions.lock().unwrap();
    let mut session = load(&st, &id)?;
    let payload = match (req.asset, req.answer) {
        (Some(a), _) => Some(AnswerPayload::Asset(a)),
        (None, Some(t)) => Some(AnswerPayload::Text(t)),
        (None, None) => None,
    };
    let entry = session
        .submit_answer(&st.cfg.bank, st.cfg.clock.as_ref(), &req.question_id, payload)?
        .clone();
    st.cfg.store.save_session_with_history(&session, st.cfg.clock.now())?;
    file_if_complete(&st, &session)?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "answer_id": format!("{id}:{}", entry.question_id),
            "question_id": entry.question_id,
            "elapsed_ms": entry.answer.elapsed_ms,
            "verdict": entry.verdict.state,
            "status": session.status(),
            "answered": session.transcript.entries.len(),
            "total": st.cfg.bank.questions.len(),
        })),
    )
        .into_response())
}

fn report_for(st: &AppState, session: &Session) -> ApiResult<IqReport> {
    let run_id = session.run_id.clone().unwrap_or_else(|| "adhoc".into());
    Ok(score_transcript(
        &session.transcript,
        &st.cfg.bank,
        &st.cfg.scale,
        &run_id,
        st.cfg.clock.now(),
    )?)
}

/// Files the report of a session that just became complete under its run.
fn file_if_complete(st: &AppState, session: &Session) -> ApiResult<()> {
    let Some(run_id) = &session.run_id else { return Ok(()) };
    if session.status() != SessionStatus::Complete {
        return Ok(());
    }
    let report = report_for(st, session)?;
    if st.cfg.store.exists(crate::store::Kind::Report, &report.report_id()) {
        return Ok(());
    }
    st.cfg.store.add_report_to_run(run_id, run_id, &report)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ReportView {
    pub subject_id: String,
    pub name: String,
    pub iq: Hundredths,
    pub vector: Vec<u32>,
    pub categories: Vec<CategoryView>,
}

#[derive(Debug, Serialize)]
pub struct CategoryView {
    pub category: Category,
    pub label: &'static str,
    pub contribution: Hundredths,
}

fn report_view(r: &IqReport) -> ReportView {
    ReportView {
        subject_id: r.subject.id.clone(),
        name: r.subject.display_name.clone(),
        iq: r.iq,
        vector: r.vector.values.clone(),
        categories: Category::ALL
            .iter()
            .map(|&c| CategoryView {
                category: c,
                label: c.label(),
                contribution: r.category(c),
            })
            .collect(),
    }
}

async fn session_report(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let session = load(&st, &id)?;
    match session.status() {
        SessionStatus::InProgress => Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("session `{id}` is still in progress"),
        )),
        SessionStatus::PendingGrading => Ok(Json(json!({
            "session_id": id,
            "status": session.status(),
            "pending_manual": session.transcript.pending_manual().count(),
            "report": null,
        }))),
        SessionStatus::Complete => {
            let report = report_for(&st, &session)?;
            Ok(Json(json!({
                "session_id": id,
                "status": session.status(),
                "pending_manual": 0,
                "report": report_view(&report),
            })))
        }
    }
}

async fn grading_queue(State(st): State<Shared>) -> ApiResult<Json<serde_json::Value>> {
    let queue = st.cfg.store.grading_queue(&st.cfg.bank)?;
    Ok(Json(json!({ "items": queue })))
}

#[derive(Debug, Deserialize)]
pub struct PostVerdict {
    pub pass: bool,
    #[serde(default)]
    pub note: String,
}

async fn post_verdict(
    State(st): State<Shared>,
    Path(answer_id): Path<String>,
    Json(req): Json<PostVerdict>,
) -> ApiResult<Json<serde_json::Value>> {
    let _guard = st.sessions.lock().unwrap();
    let (verdict, session) =
        st.cfg
            .store
            .record_manual_verdict(&st.cfg.bank, &answer_id, req.pass, &req.note, st.cfg.clock.now())?;
    file_if_complete(&st, &session)?;
    Ok(Json(json!({
        "answer_id": answer_id,
        "verdict": verdict.state,
        "correct": verdict.state == VerdictState::Correct,
        "session_status": session.status(),
    })))
}

#[derive(Debug, Deserialize)]
struct LeaderboardQuery {
    run: Option<String>,
}

async fn leaderboard(
    State(st): State<Shared>,
    Query(q): Query<LeaderboardQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let run_id = match q.run {
        Some(r) => r,
        None => match st.cfg.store.latest_run()? {
            Some(run) => run.run_id,
            None => return Err(ApiError::new(StatusCode::NOT_FOUND, "no runs recorded")),
        },
    };
    let ranking = st.cfg.store.ranking(&run_id)?;
    let entries: Vec<serde_json::Value> = ranking
        .entries
        .iter()
        .map(|e| {
            let s = &e.report.subject;
            json!({
                "rank": e.rank,
                "subject_id": s.id,
                "name": s.display_name,
                "group": s.group,
                "region": s.region,
                "kind": s.kind,
                "iq": e.report.iq,
                "categories": Category::ALL
                    .iter()
                    .map(|&c| (c.key().to_string(), json!(e.report.category(c))))
                    .collect::<serde_json::Map<_, _>>(),
            })
        })
        .collect();
    Ok(Json(json!({ "run_id": ranking.run_id, "entries": entries })))
}
