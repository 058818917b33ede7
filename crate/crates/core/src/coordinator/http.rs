//! JSON-over-HTTP surface of the coordinator and the matching blocking client.
//!
//! ```text
//! POST /resources                 {kind, payload}        -> {id, created}
//! POST /resources/next            {kind, worker_id}      -> resource | null
//! POST /resources/{id}/complete   {worker_id, result}    -> {ok} | 409 | 422
//! GET  /stats                                            -> {kind -> counts}
//! ```

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use super::{
    AddOutcome, ClientError, CompleteOutcome, Coordinator, CoordinatorClient, CoordinatorError,
    Resource, ResourceId, ResourceKind, ResourceState, Stats,
};

#[derive(Debug, Serialize, Deserialize)]
pub struct AddRequest {
    pub kind: ResourceKind,
    pub payload: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NextRequest {
    pub kind: ResourceKind,
    pub worker_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompleteRequest {
    pub worker_id: String,
    #[serde(default)]
    pub result: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CompleteResponse {
    pub ok: bool,
    /// True when the call was a repeat of an earlier successful completion.
    #[serde(default)]
    pub already_done: bool,
}

/// Wire form of a leased resource. Lease timestamps stay server-side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireResource {
    pub id: ResourceId,
    pub kind: ResourceKind,
    pub payload: String,
    pub state: ResourceState,
    pub worker_id: Option<String>,
}

impl From<Resource> for WireResource {
    fn from(r: Resource) -> Self {
        Self {
            id: r.id,
            kind: r.kind,
            payload: r.payload,
            state: r.state,
            worker_id: r.lease.map(|l| l.worker_id),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

struct ApiError(CoordinatorError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            CoordinatorError::Validation(_) => (StatusCode::BAD_REQUEST, "validation"),
            CoordinatorError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            CoordinatorError::StaleLease { .. } => (StatusCode::CONFLICT, "stale_lease"),
            CoordinatorError::InvalidState { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "invalid_state")
            }
            CoordinatorError::Store(_) => (StatusCode::INTERNAL_SERVER_ERROR, "store"),
        };
        let body = ErrorBody {
            error: code.to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<Coordinator>;

async fn add_resource(
    State(c): State<Shared>,
    Json(req): Json<AddRequest>,
) -> Result<Json<AddOutcome>, ApiError> {
    Coordinator::add_resource(&c, req.kind, &req.payload).map(Json).map_err(ApiError)
}

async fn next_resource(
    State(c): State<Shared>,
    Json(req): Json<NextRequest>,
) -> Result<Json<Option<WireResource>>, ApiError> {
    Coordinator::acquire_next(&c, req.kind, &req.worker_id)
        .map(|r| Json(r.map(WireResource::from)))
        .map_err(ApiError)
}

async fn complete(
    State(c): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<CompleteRequest>,
) -> Result<Json<CompleteResponse>, ApiError> {
    let outcome = Coordinator::complete(&c, &ResourceId(id), &req.worker_id, req.result)
        .map_err(ApiError)?;
    Ok(Json(CompleteResponse {
        ok: true,
        already_done: outcome == CompleteOutcome::AlreadyDone,
    }))
}

async fn stats(State(c): State<Shared>) -> Json<Stats> {
    Json(Coordinator::stats(&c))
}

pub fn router(coordinator: Arc<Coordinator>) -> Router {
    Router::new()
        .route("/resources", post(add_resource))
        .route("/resources/next", post(next_resource))
        .route("/resources/{id}/complete", post(complete))
        .route("/stats", get(stats))
        .with_state(coordinator)
}

/// Serves until `shutdown` resolves. A background task reclaims expired
/// leases every `reap_interval`.
pub async fn serve(
    coordinator: Arc<Coordinator>,
    listener: TcpListener,
    reap_interval: Duration,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let reaper_coord = coordinator.clone();
    let reaper = tokio::spawn(async move {
        let mut tick = tokio::time::interval(reap_interval);
        loop {
            tick.tick().await;
            let now = reaper_coord.now();
            match reaper_coord.release_expired(now) {
                Ok(0) => {}
                Ok(n) => tracing::info!(reclaimed = n, "expired leases reclaimed"),
                Err(e) => tracing::error!(error = %e, "lease reaper failed"),
            }
        }
    });
    let result = axum::serve(listener, router(coordinator))
        .with_graceful_shutdown(shutdown)
        .await;
    reaper.abort();
    result
}

/// A coordinator server running on its own thread and runtime.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> std::io::Result<()> {
        self.shutdown_inner()
    }

    fn shutdown_inner(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| {
                Err(std::io::Error::other("coordinator server thread panicked"))
            }),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.shutdown_inner();
    }
}

/// Binds `addr` (port 0 picks a free port) and serves on a background thread.
pub fn spawn_server(
    coordinator: Arc<Coordinator>,
    addr: SocketAddr,
    reap_interval: Duration,
) -> std::io::Result<ServerHandle> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("coordinator-http".into())
        .spawn(move || {
            runtime.block_on(serve(coordinator, listener, reap_interval, async {
                let _ = rx.await;
            }))
        })?;
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Blocking HTTP client for worker threads. Must not be used from inside an
/// async runtime.
#[derive(Debug, Clone)]
pub struct HttpCoordinatorClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl HttpCoordinatorClient {
    pub fn new(base_url: &str) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self {
            base: base_url.trim_end_matches('/').to_string(),
            http,
        })
    }

    fn post<B: Serialize, T: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<T, ClientError> {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .json(body)
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Self::decode(resp)
    }

    fn decode<T: serde::de::DeserializeOwned>(
        resp: reqwest::blocking::Response,
    ) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return resp
                .json()
                .map_err(|e| ClientError::Transport(format!("bad response body: {e}")));
        }
        let message = resp
            .json::<ErrorBody>()
            .map(|b| b.message)
            .unwrap_or_else(|_| status.to_string());
        Err(match status {
            StatusCode::BAD_REQUEST => ClientError::Validation(message),
            StatusCode::NOT_FOUND => ClientError::NotFound(message),
            StatusCode::CONFLICT => ClientError::StaleLease(message),
            StatusCode::UNPROCESSABLE_ENTITY => ClientError::InvalidState(message),
            _ => ClientError::Server(message),
        })
    }
}

impl CoordinatorClient for HttpCoordinatorClient {
    fn add_resource(&self, kind: ResourceKind, payload: &str) -> Result<AddOutcome, ClientError> {
        self.post(
            "/resources",
            &AddRequest {
                kind,
                payload: payload.to_string(),
            },
        )
    }

    fn acquire_next(
        &self,
        kind: ResourceKind,
        worker_id: &str,
    ) -> Result<Option<Resource>, ClientError> {
        let wire: Option<WireResource> = self.post(
            "/resources/next",
            &NextRequest {
                kind,
                worker_id: worker_id.to_string(),
            },
        )?;
        Ok(wire.map(|w| Resource {
            id: w.id,
            kind: w.kind,
            payload: w.payload,
            state: w.state,
            lease: None,
            result: None,
            completed_by: None,
            seq: 0,
        }))
    }

    fn complete(
        &self,
        id: &ResourceId,
        worker_id: &str,
        result: Option<String>,
    ) -> Result<CompleteOutcome, ClientError> {
        let resp: CompleteResponse = self.post(
            &format!("/resources/{}/complete", id.as_str()),
            &CompleteRequest {
                worker_id: worker_id.to_string(),
                result,
            },
        )?;
        Ok(if resp.already_done {
            CompleteOutcome::AlreadyDone
        } else {
            CompleteOutcome::Completed
        })
    }

    fn stats(&self) -> Result<Stats, ClientError> {
        let resp = self
            .http
            .get(format!("{}/stats", self.base))
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Self::decode(resp)
    }
}
