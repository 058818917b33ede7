//! The download worker: classify a discovered video by its subtitle list,
//! fetch the chosen track and the audio, and append a manifest record.

pub mod audio;
pub mod manifest;
pub mod resolve;
pub mod webvtt;

use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::Serialize;

use crate::coordinator::{ClientError, CoordinatorClient, ResourceKind};
use crate::model::Cue;
use crate::platform::{Platform, PlatformError};

pub use audio::{normalize_audio, AudioBuffer, AudioError, TARGET_SAMPLE_RATE};
pub use manifest::{
    finalize_manifest, read_manifest, JsonlManifest, ManifestError, ManifestRecord, ManifestSink,
    MemoryManifest, Subset,
};
pub use resolve::{resolve_subtitles, Classification, ResolveMode};

pub const AUDIO_DIR: &str = "audio";
pub const SUBTITLE_DIR: &str = "subtitles";

#[derive(Debug, thiserror::Error)]
pub enum DownloadError {
    #[error("coordinator: {0}")]
    Coordinator(#[from] ClientError),
    #[error("platform failure on video {video}: {source}")]
    Platform {
        video: String,
        #[source]
        source: PlatformError,
    },
    #[error("audio for video {video}: {source}")]
    Audio {
        video: String,
        #[source]
        source: AudioError,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

#[derive(Debug, Clone)]
pub struct DownloadConfig {
    pub worker_id: String,
    /// Root for `audio/` and `subtitles/`; manifest paths are relative to it.
    pub out_dir: PathBuf,
    pub mode: ResolveMode,
    /// Consecutive empty polls before the worker loop exits.
    pub idle_polls: usize,
    pub poll_interval: Duration,
}

impl DownloadConfig {
    pub fn new(worker_id: impl Into<String>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            worker_id: worker_id.into(),
            out_dir: out_dir.into(),
            mode: ResolveMode::default(),
            idle_polls: 3,
            poll_interval: Duration::from_millis(20),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedVideo {
    pub record: ManifestRecord,
    pub cues: Vec<Cue>,
    pub diagnostics: Vec<String>,
}

/// Keeps ids usable as file names.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DownloadError> {
    crate::report::write_atomic(path, bytes).map_err(|source| DownloadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Processes one video resource end to end. Returns `Ok(None)` when no video
/// is waiting. On any platform or storage failure the resource is left
/// leased, so lease expiry hands it to another attempt.
pub fn process_video(
    client: &dyn CoordinatorClient,
    platform: &dyn Platform,
    sink: &dyn ManifestSink,
    config: &DownloadConfig,
) -> Result<Option<ProcessedVideo>, DownloadError> {
    let Some(resource) = client.acquire_next(ResourceKind::Video, &config.worker_id)? else {
        return Ok(None);
    };
    let video_id = resource.payload.clone();
    let platform_err = |source| DownloadError::Platform {
        video: video_id.clone(),
        source,
    };

    let meta = platform.video_metadata(&video_id).map_err(platform_err)?;
    let mut classification = resolve_subtitles(&meta.subtitles, config.mode);
    let mut diagnostics = Vec::new();
    let mut cues = Vec::new();

    if let Some(track) = classification.chosen_track() {
        let body = platform
            .subtitle(&video_id, &track.language, track.kind)
            .map_err(platform_err)?;
        match webvtt::parse(&body) {
            Ok(parsed) => cues = parsed,
            Err(e) => {
                diagnostics.push(format!(
                    "malformed {} subtitle ({}): {e}; downgraded to unlabeled",
                    track.kind, track.language
                ));
                classification = Classification::Unlabeled;
            }
        }
    }

    let raw = platform.media(&video_id).map_err(platform_err)?;
    let audio = normalize_audio(&raw).map_err(|source| DownloadError::Audio {
        video: video_id.clone(),
        source,
    })?;

    let stem = file_stem(&video_id);
    let audio_rel = format!("{AUDIO_DIR}/{stem}.wav");
    let wav = audio.to_wav_bytes().map_err(|source| DownloadError::Audio {
        video: video_id.clone(),
        source,
    })?;
    write_file(&config.out_dir.join(&audio_rel), &wav)?;

    let (subset, subtitle_rel) = match &classification {
        Classification::ManualLabeled(lang) => {
            (Subset::Manual, Some(format!("{SUBTITLE_DIR}/{stem}.{lang}.manual.vtt")))
        }
        Classification::AutomaticLabeled(lang) => (
            Subset::Automatic,
            Some(format!("{SUBTITLE_DIR}/{stem}.{lang}.automatic.vtt")),
        ),
        Classification::Unlabeled => (Subset::Unlabeled, None),
    };
    if let Some(rel) = &subtitle_rel {
        write_file(&config.out_dir.join(rel), webvtt::render(&cues).as_bytes())?;
    }

    let record = ManifestRecord {
        video_id: video_id.clone(),
        channel_id: meta.channel_id,
        subset,
        language: classification.language().map(str::to_string),
        audio_path: audio_rel,
        subtitle_path: subtitle_rel,
        duration: audio.duration_s(),
        num_cues: cues.len(),
    };
    sink.append(&record)?;

    match client.complete(&resource.id, &config.worker_id, Some(subset.to_string())) {
        Ok(_) => {}
        // Our lease ran out and someone else owns the video now; their record
        // supersedes ours when the manifest is finalized.
        Err(ClientError::StaleLease(msg) | ClientError::InvalidState(msg)) => {
            diagnostics.push(format!("completion rejected: {msg}"));
        }
        Err(e) => return Err(e.into()),
    }

    Ok(Some(ProcessedVideo {
        record,
        cues,
        diagnostics,
    }))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DownloadReport {
    pub processed: usize,
    pub failed: usize,
    pub manual: usize,
    pub automatic: usize,
    pub unlabeled: usize,
    pub downgraded: usize,
}

/// Polls for videos until `idle_polls` consecutive polls come back empty.
pub fn run_download_worker(
    client: &dyn CoordinatorClient,
    platform: &dyn Platform,
    sink: &dyn ManifestSink,
    config: &DownloadConfig,
) -> Result<DownloadReport, DownloadError> {
    let mut report = DownloadReport::default();
    let mut idle = 0;
    while idle < config.idle_polls {
        match process_video(client, platform, sink, config) {
            Ok(None) => {
                idle += 1;
                thread::sleep(config.poll_interval);
            }
            Ok(Some(done)) => {
                idle = 0;
                report.processed += 1;
                match done.record.subset {
                    Subset::Manual => report.manual += 1,
                    Subset::Automatic => report.automatic += 1,
                    Subset::Unlabeled => report.unlabeled += 1,
                }
                if done.diagnostics.iter().any(|d| d.contains("downgraded")) {
                    report.downgraded += 1;
                }
                for note in &done.diagnostics {
                    tracing::warn!(worker = %config.worker_id, video = %done.record.video_id, "{note}");
                }
            }
            Err(DownloadError::Coordinator(e)) => return Err(DownloadError::Coordinator(e)),
            Err(e) => {
                report.failed += 1;
                tracing::warn!(worker = %config.worker_id, error = %e, "video left for retry");
            }
        }
    }
    Ok(report)
}
