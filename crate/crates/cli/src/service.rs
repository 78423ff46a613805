//! HTTP/JSON sessions over the solver, checker and debugger.
//!
//! Each session holds one program and optional interpretation. Work for a
//! session runs on a blocking thread while the session lock is held, so
//! requests to one session are serialized and different sessions proceed
//! independently. A human-oracle debug run pauses on the first question
//! without a verdict and is replayed from the start when one arrives.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;
use tvlp_core::debugger::{
    DebugError, DebugResult, Debugger, InterpretationOracle, OracleError, Question, ScriptedOracle, Transcript,
    TranscriptEntry, Verdict,
};
use tvlp_core::interp::{load_interpretation, Interpretation, SpecRegistry};
use tvlp_core::modelcheck::{check, CheckOptions, Condition};
use tvlp_core::slddnf::{solve, SelectionRule, SolveOptions};
use tvlp_core::syntax::{parse_atom, parse_goal, parse_program, to_disjunctive, DisjunctiveProgram};
use tvlp_core::Atom;

use crate::json;

/// Sessions idle for longer than this are dropped.
pub const SESSION_TTL: Duration = Duration::from_secs(3600);
pub const DEFAULT_PAGE: usize = 20;
pub const MAX_PAGE: usize = 500;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    version: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError { status, message: message.into(), version: None }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, message)
    }

    fn at(mut self, version: u64) -> ApiError {
        self.version = Some(version);
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if let Some(v) = self.version {
            body["version"] = json!(v);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OracleMode {
    Human,
    Interp,
}

struct DebugState {
    goal: Atom,
    mode: OracleMode,
    debugger: Debugger,
    human: ScriptedOracle,
    answered: Vec<TranscriptEntry>,
    pending: Option<Question>,
    result: Option<DebugResult>,
}

impl DebugState {
    fn transcript(&self) -> Transcript {
        match &self.result {
            Some(r) => r.transcript.clone(),
            None => Transcript { entries: self.answered.clone(), witnesses: Vec::new() },
        }
    }

    fn status(&self) -> &'static str {
        match (&self.pending, &self.result) {
            (Some(_), _) => "awaiting_verdict",
            (None, Some(_)) => "finished",
            (None, None) => "idle",
        }
    }

    fn view(&self) -> Value {
        json!({
            "goal": self.goal.to_string(),
            "oracle": match self.mode { OracleMode::Human => "human", OracleMode::Interp => "interp" },
            "status": self.status(),
            "pending": self.pending.as_ref().map(json::question),
            "result": self.result.as_ref().map(json::debug_result),
            "tree_size": self.debugger.tree.len(),
        })
    }

    /// Runs the search from the top with every verdict given so far.
    fn advance(&mut self) -> Result<(), DebugError> {
        let mut cache = BTreeMap::new();
        let run = self.debugger.debug_goal(&self.goal, &mut self.human, &mut cache);
        match run {
            Ok(r) => {
                self.pending = None;
                self.result = Some(r);
                Ok(())
            }
            Err(DebugError::Oracle(OracleError::Pending(q))) => {
                self.pending = Some(q);
                self.result = None;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

struct Session {
    id: u64,
    version: u64,
    created: SystemTime,
    touched: SystemTime,
    program: Arc<DisjunctiveProgram>,
    interp: Option<Interpretation>,
    engine: SolveOptions,
    last_outcome: Option<Value>,
    debug: Option<DebugState>,
}

fn unix(t: SystemTime) -> u64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Session {
    fn bump(&mut self) -> u64 {
        self.version += 1;
        self.version
    }

    fn view(&self) -> Value {
        json!({
            "id": self.id,
            "version": self.version,
            "created_at": unix(self.created),
            "expires_at": unix(self.touched + SESSION_TTL),
            "predicates": self.program.predicates().iter().map(|k| k.to_string()).collect::<Vec<_>>(),
            "has_interpretation": self.interp.is_some(),
            "rule": self.engine.rule.name(),
            "budget": self.engine.budget,
            "last_outcome": self.last_outcome,
            "debug": self.debug.as_ref().map(DebugState::view),
        })
    }

    fn debug(&self) -> Result<&DebugState, ApiError> {
        self.debug.as_ref().ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "no debug run").at(self.version))
    }
}

#[derive(Default)]
pub struct AppState {
    sessions: StdMutex<HashMap<u64, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

type Shared = Arc<AppState>;

impl AppState {
    fn lookup(&self, id: u64) -> Result<Arc<Mutex<Session>>, ApiError> {
        let mut map = self.sessions.lock().unwrap_or_else(|e| e.into_inner());
        let now = SystemTime::now();
        let mut expired = Vec::new();
        for (k, s) in map.iter() {
            if let Ok(s) = s.try_lock() {
                if s.touched + SESSION_TTL < now {
                    expired.push(*k);
                }
            }
        }
        for k in expired {
            map.remove(&k);
        }
        map.get(&id).cloned().ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

pub fn router() -> Router {
    router_with(Arc::new(AppState::default()))
}

pub fn router_with(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/check", post(run_check))
        .route("/sessions/{id}/solve", post(run_solve))
        .route("/sessions/{id}/debug", post(start_debug))
        .route("/sessions/{id}/question", get(get_question))
        .route("/sessions/{id}/answer", post(post_answer))
        .route("/sessions/{id}/diagnosis", get(get_diagnosis))
        .route("/sessions/{id}/tree", get(get_tree))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .with_state(state)
}

/// Locks the session and runs `f` on a blocking thread.
async fn with_session<F>(state: &Shared, id: u64, f: F) -> ApiResult
where
    F: FnOnce(&mut Session) -> ApiResult + Send + 'static,
{
    let session = state.lookup(id)?;
    let mut guard = session.lock_owned().await;
    tokio::task::spawn_blocking(move || {
        guard.touched = SystemTime::now();
        f(&mut guard)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub program: String,
    #[serde(default)]
    pub interpretation: Option<String>,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub budget: Option<u64>,
}

fn engine(rule: Option<&str>, budget: Option<u64>, base: &SolveOptions) -> Result<SolveOptions, ApiError> {
    let mut opts = base.clone();
    if let Some(r) = rule {
        opts.rule = SelectionRule::parse(r).ok_or_else(|| ApiError::bad_request(format!("unknown rule `{r}`")))?;
    }
    if let Some(b) = budget {
        opts.budget = b;
    }
    Ok(opts)
}

async fn create_session(State(state): State<Shared>, Json(req): Json<CreateRequest>) -> Result<Response, ApiError> {
    let work = tokio::task::spawn_blocking(move || -> Result<Session, ApiError> {
        let parsed = parse_program(&req.program).map_err(|e| ApiError::bad_request(format!("program: {e}")))?;
        let program = Arc::new(to_disjunctive(&parsed));
        let interp = match &req.interpretation {
            Some(text) => Some(
                load_interpretation(text, &SpecRegistry::standard(), None)
                    .map_err(|e| ApiError::bad_request(format!("interpretation: {e}")))?,
            ),
            None => None,
        };
        let engine = engine(req.rule.as_deref(), req.budget, &SolveOptions::default())?;
        let now = SystemTime::now();
        Ok(Session {
            id: 0,
            version: 1,
            created: now,
            touched: now,
            program,
            interp,
            engine,
            last_outcome: None,
            debug: None,
        })
    });
    let mut session = work.await.map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    session.id = state.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let view = session.view();
    let mut map = state.sessions.lock().unwrap_or_else(|e| e.into_inner());
    map.insert(session.id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(State(state): State<Shared>, Path(id): Path<u64>) -> ApiResult {
    with_session(&state, id, |s| Ok(Json(s.view()))).await
}

#[derive(Debug, Deserialize)]
pub struct CheckRequest {
    pub condition: String,
    #[serde(default)]
    pub max_violations: Option<usize>,
}

async fn run_check(State(state): State<Shared>, Path(id): Path<u64>, Json(req): Json<CheckRequest>) -> ApiResult {
    with_session(&state, id, move |s| {
        let v = s.version;
        let cond = match req.condition.as_str() {
            "model" => Condition::Model,
            "strong" => Condition::StrongModel,
            "completion" => Condition::CompletionModel,
            "strong_completion" => Condition::StrongCompletionModel,
            other => return Err(ApiError::bad_request(format!("unknown condition `{other}`")).at(v)),
        };
        let m = s.interp.as_ref().ok_or_else(|| ApiError::bad_request("session has no interpretation").at(v))?;
        let mut opts = CheckOptions::default();
        if let Some(n) = req.max_violations {
            opts.max_violations = n;
        }
        let r = check(cond, &s.program, m, &opts).map_err(|e| ApiError::bad_request(e.to_string()).at(v))?;
        Ok(Json(json!({ "version": v, "report": json::report(&r) })))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct SolveRequest {
    pub goal: String,
    #[serde(default)]
    pub all: bool,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub budget: Option<u64>,
}

async fn run_solve(State(state): State<Shared>, Path(id): Path<u64>, Json(req): Json<SolveRequest>) -> ApiResult {
    with_session(&state, id, move |s| {
        let v = s.version;
        let goal = parse_goal(&req.goal).map_err(|e| ApiError::bad_request(format!("goal: {e}")).at(v))?;
        let mut opts = engine(req.rule.as_deref(), req.budget, &s.engine).map_err(|e| e.at(v))?;
        opts.all_answers = req.all;
        let o = solve(&s.program, &goal, &opts).map_err(|e| ApiError::bad_request(e.to_string()).at(v))?;
        let outcome = json::outcome(&o);
        s.last_outcome = Some(outcome.clone());
        let v = s.bump();
        Ok(Json(json!({ "version": v, "outcome": outcome })))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct DebugRequest {
    pub goal: String,
    #[serde(default = "human")]
    pub oracle: String,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub budget: Option<u64>,
}

fn human() -> String {
    "human".into()
}

fn debug_error(e: DebugError, version: u64) -> ApiError {
    let status = match e {
        DebugError::NotExhaustive { .. } | DebugError::TooLarge(_) => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::BAD_REQUEST,
    };
    ApiError::new(status, e.to_string()).at(version)
}

async fn start_debug(State(state): State<Shared>, Path(id): Path<u64>, Json(req): Json<DebugRequest>) -> ApiResult {
    with_session(&state, id, move |s| {
        let v = s.version;
        let goal = parse_atom(&req.goal).map_err(|e| ApiError::bad_request(format!("goal: {e}")).at(v))?;
        let opts = engine(req.rule.as_deref(), req.budget, &s.engine).map_err(|e| e.at(v))?;
        let mode = match req.oracle.as_str() {
            "human" => OracleMode::Human,
            "interp" => OracleMode::Interp,
            other => return Err(ApiError::bad_request(format!("unknown oracle `{other}`; use human or interp")).at(v)),
        };
        let mut state = DebugState {
            goal,
            mode,
            debugger: Debugger::new(s.program.clone(), opts),
            human: ScriptedOracle::new(),
            answered: Vec::new(),
            pending: None,
            result: None,
        };
        match mode {
            OracleMode::Human => state.advance().map_err(|e| debug_error(e, v))?,
            OracleMode::Interp => {
                let m = s.interp.as_ref().ok_or_else(|| ApiError::bad_request("session has no interpretation").at(v))?;
                let r = state
                    .debugger
                    .debug_goal(&state.goal, &mut InterpretationOracle::new(m), &mut BTreeMap::new())
                    .map_err(|e| debug_error(e, v))?;
                state.result = Some(r);
            }
        }
        let view = state.view();
        s.debug = Some(state);
        let v = s.bump();
        Ok(Json(json!({ "version": v, "debug": view })))
    })
    .await
}

async fn get_question(State(state): State<Shared>, Path(id): Path<u64>) -> ApiResult {
    with_session(&state, id, |s| {
        let d = s.debug()?;
        Ok(Json(json!({
            "version": s.version,
            "status": d.status(),
            "question": d.pending.as_ref().map(json::question),
        })))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct AnswerRequest {
    pub verdict: String,
    /// The version the client saw; a mismatch means another answer got there first.
    #[serde(default)]
    pub version: Option<u64>,
}

async fn post_answer(State(state): State<Shared>, Path(id): Path<u64>, Json(req): Json<AnswerRequest>) -> ApiResult {
    with_session(&state, id, move |s| {
        let v = s.version;
        let verdict = match req.verdict.as_str() {
            "correct" => Verdict::Correct,
            "erroneous" => Verdict::Erroneous,
            "inadmissible" => Verdict::Inadmissible,
            other => {
                return Err(ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    format!("invalid verdict `{other}`; use correct, erroneous or inadmissible"),
                )
                .at(v))
            }
        };
        if let Some(seen) = req.version {
            if seen != v {
                return Err(ApiError::new(StatusCode::CONFLICT, format!("stale version {seen}")).at(v));
            }
        }
        let Some(d) = s.debug.as_mut() else {
            return Err(ApiError::new(StatusCode::CONFLICT, "no pending question").at(v));
        };
        let Some(q) = d.pending.take() else {
            return Err(ApiError::new(StatusCode::CONFLICT, "no pending question").at(v));
        };
        let text = q.to_string();
        d.human.answer(&text, verdict);
        d.answered.push(TranscriptEntry { question: text, verdict });
        d.advance().map_err(|e| debug_error(e, v))?;
        let view = d.view();
        let v = s.bump();
        Ok(Json(json!({ "version": v, "debug": view })))
    })
    .await
}

async fn get_diagnosis(State(state): State<Shared>, Path(id): Path<u64>) -> ApiResult {
    with_session(&state, id, |s| {
        let d = s.debug()?;
        Ok(Json(json!({
            "version": s.version,
            "status": d.status(),
            "result": d.result.as_ref().map(json::debug_result),
        })))
    })
    .await
}

#[derive(Debug, Deserialize)]
pub struct TreeQuery {
    pub node: Option<usize>,
    pub offset: Option<usize>,
    pub limit: Option<usize>,
}

async fn get_tree(State(state): State<Shared>, Path(id): Path<u64>, Query(q): Query<TreeQuery>) -> ApiResult {
    with_session(&state, id, move |s| {
        let v = s.version;
        let d = s.debug()?;
        let node = q.node.or_else(|| d.result.as_ref().and_then(|r| r.root)).unwrap_or(0);
        let limit = q.limit.unwrap_or(DEFAULT_PAGE).min(MAX_PAGE);
        let slice = d
            .debugger
            .tree
            .slice(node, q.offset.unwrap_or(0), limit)
            .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e.to_string()).at(v))?;
        Ok(Json(json!({ "version": v, "limit": limit, "slice": json::slice(&slice) })))
    })
    .await
}

async fn get_transcript(State(state): State<Shared>, Path(id): Path<u64>) -> ApiResult {
    with_session(&state, id, |s| {
        let d = s.debug()?;
        Ok(Json(json!({ "version": s.version, "status": d.status(), "transcript": d.transcript().to_string() })))
    })
    .await
}
