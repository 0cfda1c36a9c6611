//! HTTP routes.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use log::{info, warn};
use rehab_core::feas::{operator_workload, rule_set};
use rehab_core::model::{OperatorId, PatientId};
use rehab_core::{
    agenda_cost, board_cost, check_agenda, check_board, solve_agenda_with, solve_board_with,
    validate_instance, AgendaSolution, BoardSolution, CostVector, Instance, Mode, Outcome,
    SolveConfig, SolveHooks, Variant, Violation,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Semaphore;

use crate::gantt::{project, OperatorLane};
use crate::store::{now, JobState, JobStatus, Phase, Shared, Store, Workspace};

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<Store>,
    pub default_cutoff: f64,
    pub pool: Arc<Semaphore>,
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    Conflict(String),
    Unprocessable(serde_json::Value),
    BadRequest(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, json!({ "error": m })),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, json!({ "error": m })),
            ApiError::Unprocessable(v) => (StatusCode::UNPROCESSABLE_ENTITY, v),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, json!({ "error": m })),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": m })),
        };
        (status, Json(body)).into_response()
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl From<rehab_core::Error> for ApiError {
    fn from(e: rehab_core::Error) -> Self {
        ApiError::Internal(e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/workspaces", post(create_workspace).get(list_workspaces))
        .route("/workspaces/{id}", get(get_workspace))
        .route("/workspaces/{id}/board", get(get_board).patch(patch_board))
        .route("/workspaces/{id}/board/solve", post(solve_board))
        .route("/workspaces/{id}/agenda", get(get_agenda))
        .route("/workspaces/{id}/agenda/solve", post(solve_agenda))
        .route("/workspaces/{id}/jobs/current", delete(cancel_job).get(get_job))
        .with_state(state)
}

fn lookup(state: &AppState, id: &str) -> ApiResult<Shared> {
    state
        .store
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown workspace {id}")))
}

async fn create_workspace(State(state): State<AppState>, Json(inst): Json<Instance>) -> ApiResult<impl IntoResponse> {
    let issues = validate_instance(&inst);
    if !issues.is_empty() {
        return Err(ApiError::Unprocessable(json!({ "error": "invalid instance", "issues": issues })));
    }
    let id = state.store.create(inst)?;
    info!("created workspace {id}");
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

async fn list_workspaces(State(state): State<AppState>) -> Json<Vec<String>> {
    Json(state.store.ids())
}

#[derive(Serialize)]
struct WorkspaceSummary {
    id: String,
    patients: usize,
    operators: usize,
    sessions: usize,
    has_board: bool,
    board_dirty: bool,
    has_agenda: bool,
    job: Option<JobStatus>,
}

async fn get_workspace(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<WorkspaceSummary>> {
    let ws = lookup(&state, &id)?.lock().unwrap().snapshot();
    Ok(Json(WorkspaceSummary {
        id: ws.id,
        patients: ws.instance.patients.len(),
        operators: ws.instance.real_operators().count(),
        sessions: ws.instance.sessions.len(),
        has_board: ws.board.is_some(),
        board_dirty: ws.board_dirty,
        has_agenda: ws.agenda.is_some(),
        job: ws.job,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BoardView {
    pub board: BoardSolution,
    pub cost: CostVector,
    pub workload: BTreeMap<OperatorId, u32>,
    pub dirty: bool,
}

/// Re-checks a stored board and builds its view; a board failing the
/// checker is never served.
fn board_view(ws: &Workspace) -> ApiResult<BoardView> {
    let board = ws
        .board
        .as_ref()
        .ok_or_else(|| ApiError::Conflict("workspace has no board yet".into()))?;
    let violations = check_board(&ws.instance, board)?;
    if !violations.is_empty() {
        return Err(ApiError::Internal(format!("stored board fails verification: {}", violations[0])));
    }
    Ok(BoardView {
        board: board.clone(),
        cost: board_cost(&ws.instance, board)?,
        workload: operator_workload(&ws.instance, board),
        dirty: ws.board_dirty,
    })
}

async fn get_board(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<BoardView>> {
    let ws = lookup(&state, &id)?.lock().unwrap().snapshot();
    Ok(Json(board_view(&ws)?))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Reassignment {
    pub patient: PatientId,
    pub operator: OperatorId,
}

async fn patch_board(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(edits): Json<Vec<Reassignment>>,
) -> ApiResult<Json<BoardView>> {
    let shared = lookup(&state, &id)?;
    let mut entry = shared.lock().unwrap();
    if entry.ws.active_job().is_some() {
        return Err(ApiError::Conflict("a job is running on this workspace".into()));
    }
    let Some(mut board) = entry.ws.board.clone() else {
        return Err(ApiError::Conflict("workspace has no board yet".into()));
    };
    let inst = &entry.ws.instance;
    for e in &edits {
        if inst.patient(e.patient).is_none() || inst.operator(e.operator).is_none() {
            return Err(ApiError::Unprocessable(json!({
                "error": format!("unknown patient {} or operator {}", e.patient, e.operator),
            })));
        }
        board.assignment.insert(e.patient, e.operator);
    }
    let violations = check_board(inst, &board)?;
    if !violations.is_empty() {
        return Err(ApiError::Unprocessable(json!({
            "error": "edit breaks hard constraints",
            "rules": rule_set(&violations),
            "violations": violations,
        })));
    }
    entry.ws.board = Some(board);
    entry.ws.board_dirty = true;
    entry.ws.agenda = None;
    entry.ws.agenda_variant = None;
    state.store.save(&entry.ws)?;
    Ok(Json(board_view(&entry.ws)?))
}

#[derive(Debug, Deserialize)]
pub struct SolveParams {
    pub cutoff: Option<f64>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
}

impl SolveParams {
    fn config(&self, default_cutoff: f64) -> ApiResult<SolveConfig> {
        let cfg = SolveConfig {
            mode: self.mode.unwrap_or(Mode::Anytime),
            cutoff: self.cutoff.unwrap_or(default_cutoff),
            seed: self.seed.unwrap_or(0),
            ..SolveConfig::default()
        };
        cfg.validate().map_err(ApiError::BadRequest)?;
        Ok(cfg)
    }
}

async fn solve_board(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SolveParams>,
) -> ApiResult<impl IntoResponse> {
    let cfg = q.config(state.default_cutoff)?;
    let shared = lookup(&state, &id)?;
    let job = start_job(&state, &shared, Phase::Board, cfg, Variant::default())?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn solve_agenda(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SolveParams>,
) -> ApiResult<impl IntoResponse> {
    let cfg = q.config(state.default_cutoff)?;
    let shared = lookup(&state, &id)?;
    if shared.lock().unwrap().ws.board.is_none() {
        return Err(ApiError::Conflict("solve or upload a board first".into()));
    }
    let job = start_job(&state, &shared, Phase::Agenda, cfg, q.variant.unwrap_or_default())?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

/// Registers a queued job and hands it to a background task that waits for
/// a worker slot and runs the solver on the blocking pool.
fn start_job(state: &AppState, shared: &Shared, phase: Phase, cfg: SolveConfig, variant: Variant) -> ApiResult<JobStatus> {
    let mut entry = shared.lock().unwrap();
    if entry.ws.active_job().is_some() {
        return Err(ApiError::Conflict("a job is already running on this workspace".into()));
    }
    let job = JobStatus {
        id: state.store.next_job_id(),
        phase,
        state: JobState::Queued,
        progress: None,
        started_at: now(),
        outcome: None,
        error: None,
    };
    entry.ws.job = Some(job.clone());
    entry.cancel = Arc::new(AtomicBool::new(false));
    entry.progress = Arc::new(Mutex::new(None));
    state.store.save(&entry.ws)?;
    drop(entry);

    let state = state.clone();
    let shared = shared.clone();
    tokio::spawn(async move {
        let Ok(_permit) = state.pool.clone().acquire_owned().await else { return };
        let (inst, board, cancel, progress) = {
            let mut entry = shared.lock().unwrap();
            if entry.cancel.load(Ordering::Relaxed) {
                return;
            }
            if let Some(j) = entry.ws.job.as_mut() {
                j.state = JobState::Running;
            }
            let _ = state.store.save(&entry.ws);
            (
                entry.ws.instance.clone(),
                entry.ws.board.clone(),
                entry.cancel.clone(),
                entry.progress.clone(),
            )
        };
        let sink = progress.clone();
        let hooks = SolveHooks {
            cancel: Some(cancel.clone()),
            on_improvement: Some(Arc::new(move |_, c: &CostVector| {
                *sink.lock().unwrap() = Some(c.clone());
            })),
        };
        let result = tokio::task::spawn_blocking(move || run(phase, &inst, board.as_ref(), &cfg, variant, &hooks)).await;

        let mut entry = shared.lock().unwrap();
        let cancelled = cancel.load(Ordering::Relaxed);
        let last = progress.lock().unwrap().clone();
        let ws = &mut entry.ws;
        let Some(job) = ws.job.as_mut() else { return };
        job.progress = last;
        job.state = if cancelled { JobState::Cancelled } else { JobState::Done };
        match result {
            Ok(Ok(Solved::Board(outcome, best))) => {
                job.outcome = Some(outcome);
                if let (false, Some(b)) = (cancelled, best) {
                    ws.board = Some(b);
                    ws.board_dirty = false;
                    ws.agenda = None;
                    ws.agenda_variant = None;
                }
            }
            Ok(Ok(Solved::Agenda(outcome, best))) => {
                job.outcome = Some(outcome);
                if !cancelled {
                    ws.agenda_variant = best.as_ref().map(|_| variant);
                    ws.agenda = best;
                }
            }
            Ok(Err(e)) => job.error = Some(e.to_string()),
            Err(e) => job.error = Some(format!("solver task failed: {e}")),
        }
        if let Some(e) = &job.error {
            warn!("workspace {} job {}: {e}", ws.id, job.id);
        }
        if let Err(e) = state.store.save(ws) {
            warn!("could not persist workspace {}: {e}", ws.id);
        }
    });
    Ok(job)
}

enum Solved {
    Board(Outcome, Option<BoardSolution>),
    Agenda(Outcome, Option<AgendaSolution>),
}

fn run(
    phase: Phase,
    inst: &Instance,
    board: Option<&BoardSolution>,
    cfg: &SolveConfig,
    variant: Variant,
    hooks: &SolveHooks,
) -> rehab_core::Result<Solved> {
    match (phase, board) {
        (Phase::Board, _) => {
            let r = solve_board_with(inst, cfg, hooks)?;
            Ok(Solved::Board(r.outcome, r.best))
        }
        (Phase::Agenda, Some(board)) => {
            let r = solve_agenda_with(inst, board, cfg, variant, hooks)?;
            Ok(Solved::Agenda(r.outcome, r.best))
        }
        (Phase::Agenda, None) => Err(rehab_core::Error::InvalidParams("no board to schedule".into())),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AgendaView {
    pub variant: Option<Variant>,
    pub placements: AgendaSolution,
    pub cost: CostVector,
    pub gantt: Vec<OperatorLane>,
}

async fn get_agenda(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<AgendaView>> {
    let ws = lookup(&state, &id)?.lock().unwrap().snapshot();
    let (Some(board), Some(agenda)) = (ws.board.as_ref(), ws.agenda.as_ref()) else {
        return Err(ApiError::Conflict("workspace has no agenda for its current board".into()));
    };
    let violations: Vec<Violation> = check_agenda(&ws.instance, board, agenda)?;
    if !violations.is_empty() {
        return Err(ApiError::Internal(format!("stored agenda fails verification: {}", violations[0])));
    }
    Ok(Json(AgendaView {
        variant: ws.agenda_variant,
        placements: agenda.clone(),
        cost: agenda_cost(&ws.instance, board, agenda)?,
        gantt: project(&ws.instance, board, agenda)?,
    }))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JobStatus>> {
    let ws = lookup(&state, &id)?.lock().unwrap().snapshot();
    ws.job
        .map(Json)
        .ok_or_else(|| ApiError::Conflict("workspace has no job".into()))
}

async fn cancel_job(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JobStatus>> {
    let shared = lookup(&state, &id)?;
    let mut entry = shared.lock().unwrap();
    if entry.ws.active_job().is_none() {
        return Err(ApiError::Conflict("no active job".into()));
    }
    entry.cancel.store(true, Ordering::Relaxed);
    // A queued job never reaches the solver; settle it here.
    let job = entry.ws.job.as_mut().expect("active job");
    if job.state == JobState::Queued {
        job.state = JobState::Cancelled;
        let job = job.clone();
        state.store.save(&entry.ws)?;
        return Ok(Json(job));
    }
    Ok(Json(job.clone()))
}
