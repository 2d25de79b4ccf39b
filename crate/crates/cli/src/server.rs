//! HTTP front of the annotation store.
//!
//! GET  /api/task/next?annotator=ID   next blinded task, 204 when done
//! POST /api/vote                     {annotator, item_id, choice: LEFT|RIGHT|SAME}
//! GET  /api/summary                  preferences, alpha and progress
//! GET  /                             annotation frontend

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use eats_core::annotation::{AnnotationError, AnnotationStore, SideChoice};

#[derive(Clone)]
struct AppState {
    store: Arc<AnnotationStore>,
    ui: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: String,
}

#[derive(Debug, Deserialize)]
struct VoteBody {
    annotator: String,
    item_id: String,
    choice: SideChoice,
}

fn error_response(e: AnnotationError) -> Response {
    let status = match &e {
        AnnotationError::UnknownAnnotator(_) => StatusCode::FORBIDDEN,
        AnnotationError::UnknownItem { .. } => StatusCode::NOT_FOUND,
        AnnotationError::AlreadyVoted { .. } => StatusCode::CONFLICT,
        _ => {
            log::error!("annotation store: {e}");
            StatusCode::INTERNAL_SERVER_ERROR
        }
    };
    (status, Json(json!({"error": e.to_string()}))).into_response()
}

async fn next_task(State(app): State<AppState>, Query(q): Query<NextQuery>) -> Response {
    match app.store.next_task(&q.annotator) {
        Ok(Some(task)) => Json(task).into_response(),
        Ok(None) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => error_response(e),
    }
}

async fn vote(State(app): State<AppState>, Json(body): Json<VoteBody>) -> Response {
    let store = app.store.clone();
    let result = tokio::task::spawn_blocking(move || {
        // The resolved vote reveals the blinding, so only progress goes back.
        store
            .submit_vote(&body.annotator, &body.item_id, body.choice)
            .map(|_| store.progress().remove(&body.annotator))
    })
    .await
    .expect("vote task panicked");
    match result {
        Ok(progress) => Json(json!({"status": "accepted", "progress": progress})).into_response(),
        Err(e) => error_response(e),
    }
}

async fn summary(State(app): State<AppState>) -> Response {
    Json(app.store.summary()).into_response()
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

async fn static_file(ui: &Path, relative: &str) -> Response {
    let relative = Path::new(relative);
    if relative.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let path = ui.join(relative);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn index(State(app): State<AppState>) -> Response {
    match &app.ui {
        Some(ui) => static_file(ui, "index.html").await,
        None => Html(FALLBACK_PAGE).into_response(),
    }
}

async fn asset(State(app): State<AppState>, UrlPath(path): UrlPath<String>) -> Response {
    match &app.ui {
        Some(ui) => static_file(ui, &path).await,
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

pub fn router(store: Arc<AnnotationStore>, ui: Option<PathBuf>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/task/next", get(next_task))
        .route("/api/vote", post(vote))
        .route("/api/summary", get(summary))
        .route("/{*path}", get(asset))
        .with_state(AppState { store, ui })
}

pub async fn serve(store: Arc<AnnotationStore>, host: &str, port: u16, ui: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    // Scripts read this line to find the port when started with --port 0.
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, ui))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Served at `/` when no frontend directory is given.
const FALLBACK_PAGE: &str = r#"<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Translation preference</title>
<style>
body { font-family: sans-serif; max-width: 60rem; margin: 2rem auto; }
.panes { display: flex; gap: 1rem; }
.pane { flex: 1; border: 1px solid #ccc; padding: 1rem; min-height: 4rem; }
#source { background: #f6f6f6; padding: 1rem; }
</style>
</head>
<body>
<label>Annotator <input id="annotator"></label> <button id="start">Start</button>
<p id="progress"></p>
<div id="task" hidden>
  <div id="source"></div>
  <div class="panes">
    <div class="pane" id="left" dir="rtl"></div>
    <div class="pane" id="right" dir="rtl"></div>
  </div>
  <p>
    <button data-choice="LEFT">1 Left better</button>
    <button data-choice="SAME">2 Same</button>
    <button data-choice="RIGHT">3 Right better</button>
  </p>
</div>
<p id="done" hidden>All items rated. <a href="/api/summary">Summary</a></p>
<script>
let current = null;
const $ = (id) => document.getElementById(id);
async function load() {
  const who = $("annotator").value;
  const r = await fetch("/api/task/next?annotator=" + encodeURIComponent(who));
  if (r.status === 204) { $("task").hidden = true; $("done").hidden = false; return; }
  if (!r.ok) { alert((await r.json()).error); return; }
  current = await r.json();
  $("source").textContent = current.source_text;
  $("left").textContent = current.left_text;
  $("right").textContent = current.right_text;
  $("progress").textContent = current.progress.done + " / " + current.progress.total;
  $("task").hidden = false;
}
async function vote(choice) {
  if (!current) return;
  const body = { annotator: $("annotator").value, item_id: current.item_id, choice };
  current = null;
  await fetch("/api/vote", { method: "POST", headers: { "content-type": "application/json" }, body: JSON.stringify(body) });
  load();
}
$("start").onclick = load;
document.querySelectorAll("[data-choice]").forEach((b) => (b.onclick = () => vote(b.dataset.choice)));
document.addEventListener("keydown", (e) => {
  const choice = { "1": "LEFT", "2": "SAME", "3": "RIGHT" }[e.key];
  if (choice && e.target.tagName !== "INPUT") vote(choice);
});
</script>
</body>
</html>
"#;
