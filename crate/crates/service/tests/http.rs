use std::time::Duration;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rehab_core::generator::{generate, preset};
use rehab_core::model::{Needs, OperatorId, PatientType, PayStatus, SessionKind, TypeValue};
use rehab_core::{Instance, Rule};
use rehab_service::{router, AgendaView, AppState, BoardView, JobState, JobStatus, Reassignment, Store};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &std::path::Path) -> Router {
    router(AppState::new(Store::open(dir).unwrap(), 5.0, 2))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn nervi(patients: u32, operators: u32, seed: u64) -> Instance {
    generate(&preset("nervi").unwrap().with_counts(patients, operators, seed)).unwrap()
}

async fn create(app: &Router, inst: &Instance) -> String {
    let (status, body) = call(app, Method::POST, "/workspaces", Some(serde_json::to_value(inst).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["id"].as_str().unwrap().to_string()
}

async fn wait_job(app: &Router, id: &str) -> JobStatus {
    for _ in 0..600 {
        let (status, body) = call(app, Method::GET, &format!("/workspaces/{id}/jobs/current"), None).await;
        assert_eq!(status, StatusCode::OK);
        let job: JobStatus = serde_json::from_value(body).unwrap();
        if !job.state.is_active() {
            return job;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job did not finish");
}

#[tokio::test]
async fn unknown_workspace_and_invalid_instance() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, _) = call(&app, Method::GET, "/workspaces/42/board", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::POST, "/workspaces/42/board/solve", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let mut inst = nervi(4, 2, 1);
    inst.sessions[0].min_length = 0;
    let (status, body) = call(&app, Method::POST, "/workspaces", Some(serde_json::to_value(&inst).unwrap())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(!body["issues"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn board_edit_agenda_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let inst = nervi(8, 3, 11);
    let id = create(&app, &inst).await;

    let (status, _) = call(&app, Method::GET, &format!("/workspaces/{id}/board"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(&app, Method::POST, &format!("/workspaces/{id}/agenda/solve"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, _) = call(&app, Method::POST, &format!("/workspaces/{id}/board/solve?mode=exact&cutoff=5"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = wait_job(&app, &id).await;
    assert_eq!(job.state, JobState::Done);
    let (status, body) = call(&app, Method::GET, &format!("/workspaces/{id}/board"), None).await;
    assert_eq!(status, StatusCode::OK);
    let view: BoardView = serde_json::from_value(body).unwrap();
    assert!(!view.dirty);
    assert_eq!(view.board.assignment.len(), inst.patients.len());

    // Sending a patient to the fictitious operator is always accepted.
    let patient = inst.patients[0].id;
    let edit = vec![Reassignment { patient, operator: OperatorId::FICTITIOUS }];
    let (status, body) = call(&app, Method::PATCH, &format!("/workspaces/{id}/board"), Some(serde_json::to_value(&edit).unwrap())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let view: BoardView = serde_json::from_value(body).unwrap();
    assert!(view.dirty);
    assert_eq!(view.board.operator_of(patient), Some(OperatorId::FICTITIOUS));

    let (status, _) = call(&app, Method::POST, &format!("/workspaces/{id}/agenda/solve?variant=optimized&cutoff=3&seed=2"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let job = wait_job(&app, &id).await;
    assert_eq!(job.state, JobState::Done);
    assert!(job.error.is_none(), "{:?}", job.error);
    assert_eq!(job.outcome, Some(rehab_core::Outcome::OptimumFound));
    let (status, body) = call(&app, Method::GET, &format!("/workspaces/{id}/agenda"), None).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let view: AgendaView = serde_json::from_value(body.clone()).unwrap();
    // Gantt segments tile each placement's extended interval exactly.
    for lane in body["gantt"].as_array().unwrap() {
        for block in lane["blocks"].as_array().unwrap() {
            let sid = block["session"].as_u64().unwrap() as u32;
            let p = view.placements.get(rehab_core::model::SessionId(sid)).unwrap();
            let segs = block["segments"].as_array().unwrap();
            let mut cursor = p.start - p.before;
            for s in segs {
                assert_eq!(s["start"].as_u64().unwrap() as u32, cursor);
                cursor = s["end"].as_u64().unwrap() as u32;
            }
            assert_eq!(cursor, p.start + p.length + p.after);
            let spec = inst.session(p.session).unwrap();
            let core = segs.iter().find(|s| s["start"].as_u64().unwrap() as u32 == p.start).unwrap();
            let want = if spec.kind == SessionKind::Individual { "individual" } else { "supervised" };
            assert_eq!(core["kind"], want);
        }
    }

    // Editing the board drops the agenda.
    let edit = vec![Reassignment { patient, operator: OperatorId::FICTITIOUS }];
    let (status, _) = call(&app, Method::PATCH, &format!("/workspaces/{id}/board"), Some(serde_json::to_value(&edit).unwrap())).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, Method::GET, &format!("/workspaces/{id}/agenda"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn edit_breaking_type_limit_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut inst = nervi(6, 2, 3);
    let special = PatientType::new(TypeValue::Orthopaedic, Needs::Lifter, PayStatus::Payer);
    inst.patients[0].ptype = special;
    inst.patients[1].ptype = special;
    let op = inst.real_operators().next().unwrap().id;
    for o in inst.operators.iter_mut().filter(|o| !o.id.is_fictitious()) {
        o.qualifications.insert(TypeValue::Orthopaedic);
        o.type_limits.insert(special, 1);
    }
    let id = create(&app, &inst).await;
    call(&app, Method::POST, &format!("/workspaces/{id}/board/solve?mode=exact&cutoff=5"), None).await;
    wait_job(&app, &id).await;
    let (_, before) = call(&app, Method::GET, &format!("/workspaces/{id}/board"), None).await;

    let edit: Vec<Reassignment> = inst.patients[..2]
        .iter()
        .map(|p| Reassignment { patient: p.id, operator: op })
        .collect();
    let (status, body) = call(&app, Method::PATCH, &format!("/workspaces/{id}/board"), Some(serde_json::to_value(&edit).unwrap())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let rules: Vec<Rule> = serde_json::from_value(body["rules"].clone()).unwrap();
    assert!(rules.contains(&Rule::B4), "{body}");
    let (_, after) = call(&app, Method::GET, &format!("/workspaces/{id}/board"), None).await;
    assert_eq!(before, after);

    let bogus = json!([{ "patient": 999, "operator": 1 }]);
    let (status, _) = call(&app, Method::PATCH, &format!("/workspaces/{id}/board"), Some(bogus)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn second_job_conflicts_and_cancel_stops_the_first() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, &nervi(60, 12, 5)).await;
    let (status, _) = call(&app, Method::POST, &format!("/workspaces/{id}/board/solve?mode=exact&cutoff=60"), None).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let (status, _) = call(&app, Method::POST, &format!("/workspaces/{id}/board/solve"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = call(&app, Method::PATCH, &format!("/workspaces/{id}/board"), Some(json!([]))).await;
    assert_eq!(status, StatusCode::CONFLICT);

    tokio::time::sleep(Duration::from_millis(200)).await;
    let t = std::time::Instant::now();
    let (status, _) = call(&app, Method::DELETE, &format!("/workspaces/{id}/jobs/current"), None).await;
    assert_eq!(status, StatusCode::OK);
    let job = wait_job(&app, &id).await;
    assert_eq!(job.state, JobState::Cancelled);
    assert!(t.elapsed() < Duration::from_secs(5));
    let (status, _) = call(&app, Method::DELETE, &format!("/workspaces/{id}/jobs/current"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn workspaces_reload_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = app(dir.path());
    let id = create(&first, &nervi(6, 2, 9)).await;
    call(&first, Method::POST, &format!("/workspaces/{id}/board/solve?mode=exact&cutoff=5"), None).await;
    wait_job(&first, &id).await;
    call(&first, Method::POST, &format!("/workspaces/{id}/agenda/solve?cutoff=2"), None).await;
    wait_job(&first, &id).await;
    let other = create(&first, &nervi(3, 1, 2)).await;

    let files = |d: &std::path::Path| {
        let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        v.sort();
        v
    };
    let before = files(dir.path());
    let mut views = Vec::new();
    for uri in [
        format!("/workspaces/{id}"),
        format!("/workspaces/{id}/board"),
        format!("/workspaces/{id}/agenda"),
        format!("/workspaces/{other}"),
        "/workspaces".to_string(),
    ] {
        views.push((uri.clone(), call(&first, Method::GET, &uri, None).await));
    }
    drop(first);

    let second = app(dir.path());
    for (uri, want) in views {
        assert_eq!(call(&second, Method::GET, &uri, None).await, want, "{uri}");
    }
    assert_eq!(files(dir.path()), before);
    let (_, body) = call(&second, Method::POST, "/workspaces", Some(serde_json::to_value(nervi(3, 1, 4)).unwrap())).await;
    assert_ne!(body["id"].as_str().unwrap(), id);
    assert_ne!(body["id"].as_str().unwrap(), other);
}
