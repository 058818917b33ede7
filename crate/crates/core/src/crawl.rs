//! Keyword-based and channel-based discovery clients.
//!
//! Keyword resources become filtered, paginated searches; every video found
//! becomes a Video resource and its channel a Channel resource. Channel
//! resources are expanded into all of the channel's videos, whose channels are
//! fed back in turn, so discovery reaches the full closure.

use std::collections::HashSet;
use std::thread;
use std::time::Duration;

use serde::Serialize;

use crate::coordinator::{ClientError, CoordinatorClient, Resource, ResourceKind};
use crate::model::VideoRecord;
use crate::platform::{Platform, PlatformError, SearchPage, SearchQuery, DEFAULT_MAX_PAGES};

/// Upper bound on pages followed when listing a channel.
const MAX_CHANNEL_PAGES: usize = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum CrawlError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error("coordinator: {0}")]
    Coordinator(#[from] ClientError),
}

/// Marks a crawl that stopped early. `pages_fetched` pages were merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialCrawl {
    pub pages_fetched: usize,
    pub error: PlatformError,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrawlOutcome {
    pub video_ids: Vec<String>,
    pub partial: Option<PartialCrawl>,
}

/// Follows continuation tokens, merging pages and dropping repeated ids.
fn follow_pages(
    max_pages: usize,
    mut fetch: impl FnMut(Option<&str>) -> Result<SearchPage, PlatformError>,
) -> CrawlOutcome {
    let mut seen = HashSet::new();
    let mut out = CrawlOutcome::default();
    let mut token: Option<String> = None;
    for page_no in 0..max_pages {
        let page = match fetch(token.as_deref()) {
            Ok(p) => p,
            Err(error) => {
                out.partial = Some(PartialCrawl {
                    pages_fetched: page_no,
                    error,
                });
                break;
            }
        };
        for id in page.video_ids {
            if seen.insert(id.clone()) {
                out.video_ids.push(id);
            }
        }
        match page.continuation {
            Some(next) => token = Some(next),
            None => break,
        }
    }
    out
}

fn validate_query(query: &SearchQuery) -> Result<(), CrawlError> {
    if query.keyword.trim().is_empty() {
        return Err(CrawlError::InvalidQuery("empty keyword".into()));
    }
    if query.max_pages == 0 {
        return Err(CrawlError::InvalidQuery("max_pages must be >= 1".into()));
    }
    Ok(())
}

/// Search results with metadata, re-checked against the license filter.
/// Videos without subtitles are kept even when the query asked for them.
#[derive(Debug, Clone, Default)]
pub struct VerifiedCrawl {
    pub videos: Vec<VideoRecord>,
    pub dropped_unlicensed: usize,
    pub partial: Option<PartialCrawl>,
}

pub fn crawl_verified(
    platform: &dyn Platform,
    query: &SearchQuery,
) -> Result<VerifiedCrawl, CrawlError> {
    validate_query(query)?;
    let listing = follow_pages(query.max_pages, |tok| platform.search(query, tok));
    let mut out = VerifiedCrawl {
        partial: listing.partial,
        ..VerifiedCrawl::default()
    };
    for id in listing.video_ids {
        match platform.video_metadata(&id) {
            Ok(meta) if query.require_cc_license && !meta.license_cc => {
                out.dropped_unlicensed += 1;
            }
            Ok(meta) => out.videos.push(meta),
            Err(error) => {
                tracing::warn!(video = %id, %error, "metadata lookup failed during crawl");
                out.partial.get_or_insert(PartialCrawl {
                    pages_fetched: query.max_pages,
                    error,
                });
            }
        }
    }
    Ok(out)
}

/// Ranked, de-duplicated ids for `query`, following up to `max_pages` pages.
pub fn crawl_search(
    platform: &dyn Platform,
    query: &SearchQuery,
) -> Result<CrawlOutcome, CrawlError> {
    let verified = crawl_verified(platform, query)?;
    Ok(CrawlOutcome {
        video_ids: verified.videos.into_iter().map(|v| v.id).collect(),
        partial: verified.partial,
    })
}

pub fn extract_channel(platform: &dyn Platform, video_id: &str) -> Result<String, PlatformError> {
    platform.video_metadata(video_id).map(|m| m.channel_id)
}

/// Every video of a channel in upload order. A failure on the first page is
/// an error; a later failure yields a partial listing.
pub fn enumerate_channel(
    platform: &dyn Platform,
    channel_id: &str,
) -> Result<CrawlOutcome, PlatformError> {
    let out = follow_pages(MAX_CHANNEL_PAGES, |tok| platform.channel_videos(channel_id, tok));
    match out.partial {
        Some(PartialCrawl {
            pages_fetched: 0,
            error,
        }) => Err(error),
        _ => Ok(out),
    }
}

#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    pub worker_id: String,
    pub max_pages: usize,
    pub require_subtitles: bool,
    pub require_cc_license: bool,
    /// Consecutive polls finding neither kind before the loop exits.
    pub idle_polls: usize,
    pub poll_interval: Duration,
}

impl DiscoveryConfig {
    pub fn new(worker_id: impl Into<String>) -> Self {
        Self {
            worker_id: worker_id.into(),
            max_pages: DEFAULT_MAX_PAGES,
            require_subtitles: true,
            require_cc_license: true,
            idle_polls: 3,
            poll_interval: Duration::from_millis(20),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DiscoveryReport {
    pub keywords_processed: usize,
    pub channels_processed: usize,
    pub videos_added: usize,
    pub channels_added: usize,
    pub dropped_unlicensed: usize,
    pub partial_crawls: usize,
    pub failed_channels: usize,
}

impl DiscoveryReport {
    pub fn merge(&mut self, other: &DiscoveryReport) {
        self.keywords_processed += other.keywords_processed;
        self.channels_processed += other.channels_processed;
        self.videos_added += other.videos_added;
        self.channels_added += other.channels_added;
        self.dropped_unlicensed += other.dropped_unlicensed;
        self.partial_crawls += other.partial_crawls;
        self.failed_channels += other.failed_channels;
    }
}

fn add_video(
    client: &dyn CoordinatorClient,
    meta: &VideoRecord,
    report: &mut DiscoveryReport,
) -> Result<(), ClientError> {
    if client.add_resource(ResourceKind::Video, &meta.id)?.created {
        report.videos_added += 1;
    }
    if client.add_resource(ResourceKind::Channel, &meta.channel_id)?.created {
        report.channels_added += 1;
    }
    Ok(())
}

fn finish(
    client: &dyn CoordinatorClient,
    resource: &Resource,
    worker_id: &str,
    summary: String,
) -> Result<(), ClientError> {
    match client.complete(&resource.id, worker_id, Some(summary)) {
        Ok(_) => Ok(()),
        Err(ClientError::StaleLease(msg) | ClientError::InvalidState(msg)) => {
            tracing::warn!(resource = %resource.id, "completion rejected: {msg}");
            Ok(())
        }
        Err(e) => Err(e),
    }
}

fn process_keyword(
    client: &dyn CoordinatorClient,
    platform: &dyn Platform,
    config: &DiscoveryConfig,
    resource: &Resource,
    report: &mut DiscoveryReport,
) -> Result<(), CrawlError> {
    let query = SearchQuery {
        keyword: resource.payload.clone(),
        require_subtitles: config.require_subtitles,
        require_cc_license: config.require_cc_license,
        max_pages: config.max_pages,
    };
    let crawl = crawl_verified(platform, &query)?;
    for meta in &crawl.videos {
        add_video(client, meta, report)?;
    }
    report.dropped_unlicensed += crawl.dropped_unlicensed;
    let summary = match &crawl.partial {
        Some(p) => {
            report.partial_crawls += 1;
            format!("partial videos={} pages={} error={}", crawl.videos.len(), p.pages_fetched, p.error)
        }
        None => format!("videos={}", crawl.videos.len()),
    };
    finish(client, resource, &config.worker_id, summary)?;
    report.keywords_processed += 1;
    Ok(())
}

fn process_channel(
    client: &dyn CoordinatorClient,
    platform: &dyn Platform,
    config: &DiscoveryConfig,
    resource: &Resource,
    report: &mut DiscoveryReport,
) -> Result<(), CrawlError> {
    let listing = match enumerate_channel(platform, &resource.payload) {
        Ok(l) => l,
        Err(error) => {
            // Leave the lease to expire so another attempt can retry it.
            tracing::warn!(channel = %resource.payload, %error, "channel listing failed");
            report.failed_channels += 1;
            return Ok(());
        }
    };
    let mut kept = 0;
    let mut partial = listing.partial.clone();
    for id in &listing.video_ids {
        match platform.video_metadata(id) {
            Ok(meta) if config.require_cc_license && !meta.license_cc => {
                report.dropped_unlicensed += 1;
            }
            Ok(meta) => {
                add_video(client, &meta, report)?;
                kept += 1;
            }
            Err(error) => {
                partial.get_or_insert(PartialCrawl {
                    pages_fetched: 0,
                    error,
                });
            }
        }
    }
    let summary = match partial {
        Some(p) => {
            report.partial_crawls += 1;
            format!("partial videos={kept} error={}", p.error)
        }
        None => format!("videos={kept}"),
    };
    finish(client, resource, &config.worker_id, summary)?;
    report.channels_processed += 1;
    Ok(())
}

/// Runs keyword and channel work until neither kind is available for
/// `idle_polls` consecutive polls.
pub fn discovery_loop(
    client: &dyn CoordinatorClient,
    platform: &dyn Platform,
    config: &DiscoveryConfig,
) -> Result<DiscoveryReport, CrawlError> {
    let mut report = DiscoveryReport::default();
    let mut idle = 0;
    while idle < config.idle_polls {
        if let Some(r) = client.acquire_next(ResourceKind::Keyword, &config.worker_id)? {
            idle = 0;
            process_keyword(client, platform, config, &r, &mut report)?;
            continue;
        }
        if let Some(r) = client.acquire_next(ResourceKind::Channel, &config.worker_id)? {
            idle = 0;
            process_channel(client, platform, config, &r, &mut report)?;
            continue;
        }
        idle += 1;
        thread::sleep(config.poll_interval);
    }
    Ok(report)
}
