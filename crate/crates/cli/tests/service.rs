use std::collections::HashMap;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const GOAL: &str = "merge([2],[1],X)";

fn corpus(name: &str) -> String {
    let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn mutant() -> String {
    corpus("merge.pl").replace("merge(A.As, B.Bs, B.Cs) :- A > B", "merge(A.As, B.Bs, A.Cs) :- A > B")
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or(Body::empty(), |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn session(app: &Router, program: &str, interp: Option<&str>) -> u64 {
    let (s, v) = call(app, "POST", "/sessions", Some(json!({ "program": program, "interpretation": interp }))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["id"].as_u64().unwrap()
}

/// Runs the CLI in process and returns its JSON output.
fn cli_json(args: &[&str]) -> Value {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = tvlp::cli::run(args.iter().copied(), &mut std::io::empty(), &mut out, &mut err);
    assert!(code <= 1, "{}", String::from_utf8_lossy(&err));
    serde_json::from_slice(&out).unwrap()
}

/// Verdicts an interpretation oracle gives, keyed by question text.
fn reference_verdicts(transcript: &str) -> HashMap<String, String> {
    transcript
        .lines()
        .filter_map(|l| l.rsplit_once("; "))
        .map(|(q, v)| (q.to_string(), v.to_string()))
        .collect()
}

#[tokio::test]
async fn scripted_debug_over_http_matches_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("mutant.pl");
    std::fs::write(&prog, mutant()).unwrap();
    let interp = format!("{}/../../corpus/merge.interp", env!("CARGO_MANIFEST_DIR"));
    let saved = dir.path().join("t.txt");
    let p = prog.to_str().unwrap();
    let reference = cli_json(&[
        "tvlp", "debug", "--program", p, "--goal", GOAL, "--oracle", "interp", "--interp", &interp,
        "--save-transcript", saved.to_str().unwrap(), "--json",
    ]);
    let replayed = cli_json(&[
        "tvlp", "debug", "--program", p, "--goal", GOAL, "--oracle", "transcript", "--transcript",
        saved.to_str().unwrap(), "--json",
    ]);
    assert_eq!(reference, replayed);
    let verdicts = reference_verdicts(reference["transcript"].as_str().unwrap());

    let app = tvlp::service::router();
    let id = session(&app, &mutant(), None).await;
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/debug"), Some(json!({ "goal": GOAL }))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let mut asked = 0;
    loop {
        let (s, q) = call(&app, "GET", &format!("/sessions/{id}/question"), None).await;
        assert_eq!(s, StatusCode::OK);
        if q["question"].is_null() {
            break;
        }
        let text = q["question"]["text"].as_str().unwrap();
        let verdict = &verdicts[text];
        let body = json!({ "verdict": verdict, "version": q["version"] });
        let (s, a) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(body)).await;
        assert_eq!(s, StatusCode::OK, "{a}");
        assert!(a["version"].as_u64() > q["version"].as_u64());
        asked += 1;
    }
    assert_eq!(asked, verdicts.len());
    let (s, d) = call(&app, "GET", &format!("/sessions/{id}/diagnosis"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(d["status"], "finished");
    assert_eq!(d["result"], reference);
    let (_, t) = call(&app, "GET", &format!("/sessions/{id}/transcript"), None).await;
    assert_eq!(t["transcript"], reference["transcript"]);
}

#[tokio::test]
async fn interpretation_oracle_over_http_matches_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("mutant.pl");
    std::fs::write(&prog, mutant()).unwrap();
    let interp = format!("{}/../../corpus/merge.interp", env!("CARGO_MANIFEST_DIR"));
    let reference = cli_json(&[
        "tvlp", "debug", "--program", prog.to_str().unwrap(), "--goal", GOAL, "--oracle", "interp", "--interp",
        &interp, "--json",
    ]);
    let app = tvlp::service::router();
    let id = session(&app, &mutant(), Some(&corpus("merge.interp"))).await;
    let body = json!({ "goal": GOAL, "oracle": "interp" });
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/debug"), Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["debug"]["result"], reference);
}

#[tokio::test]
async fn solve_over_http_matches_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("merge.pl");
    std::fs::write(&prog, corpus("merge.pl")).unwrap();
    let reference = cli_json(&[
        "tvlp", "solve", "--program", prog.to_str().unwrap(), "--goal", "merge(X,Y,[1,2])", "--all", "--json",
    ]);
    let app = tvlp::service::router();
    let id = session(&app, &corpus("merge.pl"), None).await;
    let body = json!({ "goal": "merge(X,Y,[1,2])", "all": true });
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/solve"), Some(body)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["outcome"], reference);
}

#[tokio::test]
async fn invalid_verdict_is_unprocessable() {
    let app = tvlp::service::router();
    let id = session(&app, &mutant(), None).await;
    call(&app, "POST", &format!("/sessions/{id}/debug"), Some(json!({ "goal": GOAL }))).await;
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(json!({ "verdict": "maybe" }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v["version"].is_u64());
    let (_, q) = call(&app, "GET", &format!("/sessions/{id}/question"), None).await;
    assert!(!q["question"].is_null(), "the question stays pending");
}

#[tokio::test]
async fn answer_without_pending_question_conflicts() {
    let app = tvlp::service::router();
    let id = session(&app, &mutant(), None).await;
    let answer = json!({ "verdict": "correct" });
    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(answer.clone())).await;
    assert_eq!(s, StatusCode::CONFLICT);
    call(&app, "POST", &format!("/sessions/{id}/debug"), Some(json!({ "goal": GOAL }))).await;
    let stale = json!({ "verdict": "correct", "version": 1 });
    let (s, v) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(stale)).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let app = tvlp::service::router();
    for (method, path) in [("GET", "/sessions/99"), ("GET", "/sessions/99/question"), ("GET", "/sessions/99/tree")] {
        let (s, _) = call(&app, method, path, None).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{path}");
    }
    let (s, _) = call(&app, "POST", "/sessions/99/answer", Some(json!({ "verdict": "correct" }))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_program_is_a_bad_request() {
    let app = tvlp::service::router();
    let (s, v) = call(&app, "POST", "/sessions", Some(json!({ "program": "p :- ." }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("1:"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_keep_their_own_questions() {
    let app = tvlp::service::router();
    let subs_goal = "subs(X,[1])";
    let subs = corpus("subs.pl").replace("not member(H, T)", "not member(H, LH)");
    let a = session(&app, &mutant(), None).await;
    let b = session(&app, &subs, None).await;
    let run = |id: u64, goal: &'static str, app: Router| async move {
        call(&app, "POST", &format!("/sessions/{id}/debug"), Some(json!({ "goal": goal }))).await;
        let mut seen = Vec::new();
        for _ in 0..20 {
            let (_, q) = call(&app, "GET", &format!("/sessions/{id}/question"), None).await;
            let Some(text) = q["question"]["text"].as_str() else { break };
            seen.push(text.to_string());
            let body = json!({ "verdict": "correct", "version": q["version"] });
            let (s, v) = call(&app, "POST", &format!("/sessions/{id}/answer"), Some(body)).await;
            assert_eq!(s, StatusCode::OK, "{v}");
        }
        seen
    };
    let (qa, qb) = tokio::join!(
        tokio::spawn(run(a, GOAL, app.clone())),
        tokio::spawn(run(b, subs_goal, app.clone()))
    );
    let (qa, qb) = (qa.unwrap(), qb.unwrap());
    assert!(!qa.is_empty() && !qb.is_empty());
    assert!(qa.iter().all(|q| q.contains("merge")), "{qa:?}");
    assert!(qb.iter().all(|q| q.contains("subs") || q.contains("select") || q.contains("member")), "{qb:?}");
    assert!(qa.iter().all(|q| !qb.contains(q)));
}

#[tokio::test]
async fn tree_slices_are_paginated() {
    let app = tvlp::service::router();
    let id = session(&app, &mutant(), Some(&corpus("merge.interp"))).await;
    let body = json!({ "goal": GOAL, "oracle": "interp" });
    let (_, v) = call(&app, "POST", &format!("/sessions/{id}/debug"), Some(body)).await;
    let root = v["debug"]["result"]["root"].as_u64().unwrap();
    let (s, page) = call(&app, "GET", &format!("/sessions/{id}/tree?node={root}&offset=0&limit=1"), None).await;
    assert_eq!(s, StatusCode::OK);
    let total = page["slice"]["total_children"].as_u64().unwrap();
    assert!(total >= 1);
    assert_eq!(page["slice"]["children"].as_array().unwrap().len(), 1);
    assert_eq!(page["slice"]["node"]["id"].as_u64(), Some(root));
    let (s, past) = call(&app, "GET", &format!("/sessions/{id}/tree?node={root}&offset={}", total + 5), None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(past["slice"]["children"].as_array().unwrap().is_empty());
    let (s, _) = call(&app, "GET", &format!("/sessions/{id}/tree?node=100000"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn every_response_carries_the_version() {
    let app = tvlp::service::router();
    let id = session(&app, &corpus("merge.pl"), Some(&corpus("merge.interp"))).await;
    let (_, s0) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let (_, solved) = call(&app, "POST", &format!("/sessions/{id}/solve"), Some(json!({ "goal": "merge([1],[2],X)" }))).await;
    let (_, checked) = call(&app, "POST", &format!("/sessions/{id}/check"), Some(json!({ "condition": "model" }))).await;
    assert_eq!(checked["report"]["holds"], true);
    let (s, none) = call(&app, "GET", &format!("/sessions/{id}/diagnosis"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let v0 = s0["version"].as_u64().unwrap();
    assert_eq!(solved["version"].as_u64(), Some(v0 + 1));
    assert_eq!(checked["version"].as_u64(), Some(v0 + 1));
    assert_eq!(none["version"].as_u64(), Some(v0 + 1));
}
