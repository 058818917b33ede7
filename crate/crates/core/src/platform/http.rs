//! HTTP surface for any [`Platform`], plus a blocking client implementing
//! [`Platform`] over it, so workers can run against the simulator over real
//! sockets.
//!
//! ```text
//! GET /search?keyword=..&require_subtitles=..&require_cc_license=..&continuation=..
//! GET /videos/{id}
//! GET /videos/{id}/media                          -> audio/wav, native format
//! GET /videos/{id}/subtitles?language=..&kind=..  -> text/vtt
//! GET /channels/{id}/videos?continuation=..
//! ```

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use super::{Platform, PlatformError, RawMedia, SearchPage, SearchQuery, DEFAULT_MAX_PAGES};
use crate::download::audio::read_wav;
use crate::model::{SubtitleKind, VideoRecord};

type Shared = Arc<dyn Platform>;

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchParams {
    pub keyword: String,
    #[serde(default)]
    pub require_subtitles: bool,
    #[serde(default)]
    pub require_cc_license: bool,
    pub continuation: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PageParams {
    pub continuation: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubtitleParams {
    pub language: String,
    pub kind: SubtitleKind,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PlatformErrorBody {
    pub error: String,
    #[serde(default)]
    pub what: Option<String>,
    #[serde(default)]
    pub id: Option<String>,
    pub message: String,
}

struct ApiError(PlatformError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.0.to_string();
        let (status, body) = match self.0 {
            PlatformError::NotFound { what, id } => (
                StatusCode::NOT_FOUND,
                PlatformErrorBody {
                    error: "not_found".into(),
                    what: Some(what.into()),
                    id: Some(id),
                    message,
                },
            ),
            PlatformError::InvalidContinuation(token) => (
                StatusCode::BAD_REQUEST,
                PlatformErrorBody {
                    error: "invalid_continuation".into(),
                    what: None,
                    id: Some(token),
                    message,
                },
            ),
            PlatformError::InvalidRequest(_) => (
                StatusCode::BAD_REQUEST,
                PlatformErrorBody {
                    error: "invalid_request".into(),
                    what: None,
                    id: None,
                    message,
                },
            ),
            PlatformError::Unavailable(_) => (
                StatusCode::SERVICE_UNAVAILABLE,
                PlatformErrorBody {
                    error: "unavailable".into(),
                    what: None,
                    id: None,
                    message,
                },
            ),
        };
        (status, Json(body)).into_response()
    }
}

/// Runs a blocking platform call off the async worker threads.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, PlatformError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(PlatformError::Unavailable(e.to_string())))?
        .map_err(ApiError)
}

async fn search(
    State(p): State<Shared>,
    Query(q): Query<SearchParams>,
) -> Result<Json<SearchPage>, ApiError> {
    let query = SearchQuery {
        keyword: q.keyword,
        require_subtitles: q.require_subtitles,
        require_cc_license: q.require_cc_license,
        max_pages: DEFAULT_MAX_PAGES,
    };
    blocking(move || p.search(&query, q.continuation.as_deref()))
        .await
        .map(Json)
}

async fn metadata(
    State(p): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<VideoRecord>, ApiError> {
    blocking(move || p.video_metadata(&id)).await.map(Json)
}

async fn channel_videos(
    State(p): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<PageParams>,
) -> Result<Json<SearchPage>, ApiError> {
    blocking(move || p.channel_videos(&id, q.continuation.as_deref()))
        .await
        .map(Json)
}

async fn media(State(p): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let bytes = blocking(move || {
        let raw = p.media(&id)?;
        encode_wav(&raw).map_err(|e| PlatformError::Unavailable(e.to_string()))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response())
}

async fn subtitle(
    State(p): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<SubtitleParams>,
) -> Result<Response, ApiError> {
    let body = blocking(move || p.subtitle(&id, &q.language, q.kind)).await?;
    Ok(([(header::CONTENT_TYPE, "text/vtt; charset=utf-8")], body).into_response())
}

fn encode_wav(raw: &RawMedia) -> Result<Vec<u8>, hound::Error> {
    let spec = hound::WavSpec {
        channels: raw.channels,
        sample_rate: raw.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = std::io::Cursor::new(Vec::new());
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec)?;
        for &s in &raw.samples {
            w.write_sample(s)?;
        }
        w.finalize()?;
    }
    Ok(cursor.into_inner())
}

pub fn router(platform: Arc<dyn Platform>) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/videos/{id}", get(metadata))
        .route("/videos/{id}/media", get(media))
        .route("/videos/{id}/subtitles", get(subtitle))
        .route("/channels/{id}/videos", get(channel_videos))
        .with_state(platform)
}

/// A platform server running on its own thread and runtime.
pub struct PlatformServer {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl PlatformServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> std::io::Result<()> {
        self.shutdown_inner()
    }

    /// Blocks until the server exits.
    pub fn join(mut self) -> std::io::Result<()> {
        self.shutdown.take();
        match self.thread.take() {
            Some(t) => t
                .join()
                .unwrap_or_else(|_| Err(std::io::Error::other("platform server panicked"))),
            None => Ok(()),
        }
    }

    fn shutdown_inner(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t
                .join()
                .unwrap_or_else(|_| Err(std::io::Error::other("platform server panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for PlatformServer {
    fn drop(&mut self) {
        let _ = self.shutdown_inner();
    }
}

pub fn spawn_platform_server(
    platform: Arc<dyn Platform>,
    addr: SocketAddr,
) -> std::io::Result<PlatformServer> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    let listener = runtime.block_on(TcpListener::bind(addr))?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(platform);
    let thread = std::thread::Builder::new()
        .name("platform-http".into())
        .spawn(move || {
            runtime.block_on(async move {
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        // A dropped sender (join) means run until the process ends.
                        if rx.await.is_err() {
                            std::future::pending::<()>().await;
                        }
                    })
                    .await
            })
        })?;
    Ok(PlatformServer {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

/// Blocking client for a platform served over HTTP.
#[derive(Debug, Clone)]
pub struct HttpPlatform {
    base: String,
    http: reqwest::blocking::Client,
}

impl HttpPlatform {
    pub fn new(base_url: &str) -> Result<Self, PlatformError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(60))
            .build()
            .map_err(|e| PlatformError::Unavailable(e.to_string()))?;
        Ok(Self {
            base: base_url.trim_end_matches('/').to_string(),
            http,
        })
    }

    fn get(
        &self,
        path: &str,
        query: &[(&str, &str)],
    ) -> Result<reqwest::blocking::Response, PlatformError> {
        let resp = self
            .http
            .get(format!("{}{path}", self.base))
            .query(query)
            .send()
            .map_err(|e| PlatformError::Unavailable(e.to_string()))?;
        if resp.status().is_success() {
            return Ok(resp);
        }
        let status = resp.status();
        let body: PlatformErrorBody = resp.json().unwrap_or(PlatformErrorBody {
            error: "unavailable".into(),
            what: None,
            id: None,
            message: status.to_string(),
        });
        Err(match body.error.as_str() {
            "not_found" => PlatformError::NotFound {
                what: match body.what.as_deref() {
                    Some("video") => "video",
                    Some("channel") => "channel",
                    Some("subtitle track") => "subtitle track",
                    _ => "resource",
                },
                id: body.id.unwrap_or_default(),
            },
            "invalid_continuation" => {
                PlatformError::InvalidContinuation(body.id.unwrap_or_default())
            }
            "invalid_request" => PlatformError::InvalidRequest(body.message),
            _ => PlatformError::Unavailable(body.message),
        })
    }

    fn json<T: serde::de::DeserializeOwned>(
        resp: reqwest::blocking::Response,
    ) -> Result<T, PlatformError> {
        resp.json()
            .map_err(|e| PlatformError::Unavailable(format!("bad response body: {e}")))
    }
}

/// Path segments are ids from the platform itself; escape the few characters
/// that would change the route.
fn segment(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for b in id.bytes() {
        if b.is_ascii_alphanumeric() || b"-_.~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl Platform for HttpPlatform {
    fn search(
        &self,
        query: &SearchQuery,
        continuation: Option<&str>,
    ) -> Result<SearchPage, PlatformError> {
        let subs = query.require_subtitles.to_string();
        let cc = query.require_cc_license.to_string();
        let mut params = vec![
            ("keyword", query.keyword.as_str()),
            ("require_subtitles", subs.as_str()),
            ("require_cc_license", cc.as_str()),
        ];
        if let Some(c) = continuation {
            params.push(("continuation", c));
        }
        Self::json(self.get("/search", &params)?)
    }

    fn video_metadata(&self, id: &str) -> Result<VideoRecord, PlatformError> {
        Self::json(self.get(&format!("/videos/{}", segment(id)), &[])?)
    }

    fn channel_videos(
        &self,
        channel_id: &str,
        continuation: Option<&str>,
    ) -> Result<SearchPage, PlatformError> {
        let params: Vec<_> = continuation.map(|c| ("continuation", c)).into_iter().collect();
        Self::json(self.get(&format!("/channels/{}/videos", segment(channel_id)), &params)?)
    }

    fn media(&self, id: &str) -> Result<RawMedia, PlatformError> {
        let bytes = self
            .get(&format!("/videos/{}/media", segment(id)), &[])?
            .bytes()
            .map_err(|e| PlatformError::Unavailable(e.to_string()))?;
        read_wav(&bytes).map_err(|e| PlatformError::Unavailable(format!("bad media: {e}")))
    }

    fn subtitle(
        &self,
        id: &str,
        language: &str,
        kind: SubtitleKind,
    ) -> Result<String, PlatformError> {
        self.get(
            &format!("/videos/{}/subtitles", segment(id)),
            &[("language", language), ("kind", kind.as_str())],
        )?
        .text()
        .map_err(|e| PlatformError::Unavailable(e.to_string()))
    }
}
