//! Video platform adapter interface, plus the deterministic simulator that
//! implements it.

pub mod acoustic;
pub mod http;
pub mod sim;
pub mod worldgen;

use serde::{Deserialize, Serialize};

use crate::model::{SubtitleKind, VideoRecord};

pub use sim::{SimPlatform, WorldError, WorldSpec};

pub const DEFAULT_MAX_PAGES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub keyword: String,
    pub require_subtitles: bool,
    pub require_cc_license: bool,
    pub max_pages: usize,
}

impl SearchQuery {
    /// Query with both filters on, as the keyword client issues it.
    pub fn filtered(keyword: &str) -> Self {
        Self {
            keyword: keyword.to_string(),
            require_subtitles: true,
            require_cc_license: true,
            max_pages: DEFAULT_MAX_PAGES,
        }
    }

    pub fn with_max_pages(mut self, max_pages: usize) -> Self {
        self.max_pages = max_pages;
        self
    }
}

/// One page of a ranked listing. `continuation` is absent on the last page.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SearchPage {
    pub video_ids: Vec<String>,
    pub continuation: Option<String>,
}

/// Raw decoded media: interleaved 16-bit PCM.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMedia {
    pub sample_rate: u32,
    pub channels: u16,
    pub samples: Vec<i16>,
}

impl RawMedia {
    pub fn frames(&self) -> usize {
        if self.channels == 0 {
            0
        } else {
            self.samples.len() / self.channels as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlatformError {
    #[error("{what} `{id}` not found")]
    NotFound { what: &'static str, id: String },
    #[error("invalid continuation token `{0}`")]
    InvalidContinuation(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("platform unavailable: {0}")]
    Unavailable(String),
}

impl PlatformError {
    pub fn not_found(what: &'static str, id: &str) -> Self {
        Self::NotFound {
            what,
            id: id.to_string(),
        }
    }
}

pub trait Platform: Send + Sync {
    fn search(
        &self,
        query: &SearchQuery,
        continuation: Option<&str>,
    ) -> Result<SearchPage, PlatformError>;

    fn video_metadata(&self, id: &str) -> Result<VideoRecord, PlatformError>;

    /// All videos of a channel in upload order, paginated like search.
    fn channel_videos(
        &self,
        channel_id: &str,
        continuation: Option<&str>,
    ) -> Result<SearchPage, PlatformError>;

    fn media(&self, id: &str) -> Result<RawMedia, PlatformError>;

    /// The subtitle track rendered as WebVTT.
    fn subtitle(
        &self,
        id: &str,
        language: &str,
        kind: SubtitleKind,
    ) -> Result<String, PlatformError>;
}

/// Placeholder for a live platform adapter. Every call fails.
#[derive(Debug, Default, Clone, Copy)]
pub struct LivePlatformStub;

impl LivePlatformStub {
    fn unavailable<T>() -> Result<T, PlatformError> {
        Err(PlatformError::Unavailable(
            "live platform access is not implemented".into(),
        ))
    }
}

impl Platform for LivePlatformStub {
    fn search(&self, _: &SearchQuery, _: Option<&str>) -> Result<SearchPage, PlatformError> {
        Self::unavailable()
    }

    fn video_metadata(&self, _: &str) -> Result<VideoRecord, PlatformError> {
        Self::unavailable()
    }

    fn channel_videos(&self, _: &str, _: Option<&str>) -> Result<SearchPage, PlatformError> {
        Self::unavailable()
    }

    fn media(&self, _: &str) -> Result<RawMedia, PlatformError> {
        Self::unavailable()
    }

    fn subtitle(&self, _: &str, _: &str, _: SubtitleKind) -> Result<String, PlatformError> {
        Self::unavailable()
    }
}

impl<T: Platform + ?Sized> Platform for std::sync::Arc<T> {
    fn search(&self, q: &SearchQuery, c: Option<&str>) -> Result<SearchPage, PlatformError> {
        (**self).search(q, c)
    }

    fn video_metadata(&self, id: &str) -> Result<VideoRecord, PlatformError> {
        (**self).video_metadata(id)
    }

    fn channel_videos(&self, ch: &str, c: Option<&str>) -> Result<SearchPage, PlatformError> {
        (**self).channel_videos(ch, c)
    }

    fn media(&self, id: &str) -> Result<RawMedia, PlatformError> {
        (**self).media(id)
    }

    fn subtitle(&self, id: &str, l: &str, k: SubtitleKind) -> Result<String, PlatformError> {
        (**self).subtitle(id, l, k)
    }
}
