//! Local HTTP API. All state changes go through one mutex-guarded
//! [`Service`].

use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;

use showme_core::device::InputEvent;
use showme_core::executor::ParameterAssignment;

use crate::session::{Reply, Service, ServiceError, SessionState};

pub type Shared = Arc<Mutex<Service>>;

pub struct ApiError(StatusCode, String);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match e {
            ServiceError::State(_) => StatusCode::CONFLICT,
            ServiceError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Execution(_) | ServiceError::Other(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes)
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, format!("malformed body: {e}")))
}

fn lock(s: &Shared) -> std::sync::MutexGuard<'_, Service> {
    s.lock().unwrap_or_else(|p| p.into_inner())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    #[serde(flatten)]
    pub state: SessionState,
    pub question: Option<String>,
    pub screen: String,
    pub package: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceBody {
    pub text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerBody {
    pub accept: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecuteBody {
    pub task_id: String,
    #[serde(default)]
    pub params: ParameterAssignment,
}

async fn state(State(s): State<Shared>) -> Json<StateView> {
    let svc = lock(&s);
    Json(StateView {
        state: svc.state().clone(),
        question: svc.state().question(),
        screen: svc.device().current_screen().to_string(),
        package: svc.package().id().to_string(),
    })
}

async fn screen(State(s): State<Shared>) -> Result<Response, ApiError> {
    let png = lock(&s).screen_png()?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn event(State(s): State<Shared>, bytes: Bytes) -> ApiResult<Reply> {
    let ev: InputEvent = body(&bytes)?;
    Ok(Json(lock(&s).event(ev)?))
}

async fn utterance(State(s): State<Shared>, bytes: Bytes) -> ApiResult<Reply> {
    let b: UtteranceBody = body(&bytes)?;
    Ok(Json(lock(&s).handle_utterance(&b.text)?))
}

async fn consent(State(s): State<Shared>, bytes: Bytes) -> ApiResult<Reply> {
    let b: AnswerBody = body(&bytes)?;
    Ok(Json(lock(&s).consent(b.accept)?))
}

async fn verify(State(s): State<Shared>, bytes: Bytes) -> ApiResult<Reply> {
    let b: AnswerBody = body(&bytes)?;
    Ok(Json(lock(&s).verify(b.accept)?))
}

async fn end_demo(State(s): State<Shared>) -> ApiResult<Reply> {
    Ok(Json(lock(&s).end_demo()?))
}

async fn cancel(State(s): State<Shared>) -> ApiResult<Reply> {
    Ok(Json(lock(&s).cancel()?))
}

async fn clusters(State(s): State<Shared>) -> Json<serde_json::Value> {
    Json(json!(lock(&s).cluster_views()))
}

async fn tasks(State(s): State<Shared>) -> Result<Json<serde_json::Value>, ApiError> {
    Ok(Json(json!(lock(&s).tasks()?)))
}

async fn execute(State(s): State<Shared>, bytes: Bytes) -> ApiResult<Reply> {
    let b: ExecuteBody = body(&bytes)?;
    Ok(Json(lock(&s).execute(&b.task_id, &b.params)?))
}

async fn report(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<serde_json::Value>, ApiError> {
    Ok(Json(json!(lock(&s).report(&id)?)))
}

pub fn router(service: Shared) -> Router {
    Router::new()
        .route("/state", get(state))
        .route("/screen", get(screen))
        .route("/event", post(event))
        .route("/utterance", post(utterance))
        .route("/consent", post(consent))
        .route("/verify", post(verify))
        .route("/end-demo", post(end_demo))
        .route("/cancel", post(cancel))
        .route("/clusters", get(clusters))
        .route("/tasks", get(tasks))
        .route("/execute", post(execute))
        .route("/report/:id", get(report))
        .with_state(service)
}

pub async fn serve(service: Service, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(Mutex::new(service)))).await
}
