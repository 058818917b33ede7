//! Deterministic in-process platform built from a declarative world file.
//!
//! World file schema (JSON):
//!
//! ```text
//! {
//!   "page_size": 10,                      // results per listing page, >= 1
//!   "extra_channels": ["UC..."],          // optional: channels with no uploads
//!   "videos": [{
//!     "id": "...", "channel_id": "...",   // ids unique; list order = upload order
//!     "title_keywords": ["..."],          // search matches exact entries; repeats raise rank
//!     "license_cc": true,
//!     "duration_s": 42.5,
//!     "audio_seed": 17,                   // seeds media and acoustic posteriors
//!     "media_sample_rate": 48000,         // optional, default 48000
//!     "media_channels": 2,                // optional, default 2
//!     "acoustic_noise": 0.0,              // optional, in [0, 1]; background noise level
//!     "subtitle_tracks": [{
//!       "language": "en", "kind": "manual" | "automatic",
//!       "malformed": false,               // optional: serve a broken WebVTT body
//!       "cues": [{"start": 0.5, "end": 3.0, "text": "...",
//!                 "spoken_text": "..."}]  // optional ground truth, defaults to text
//!     }]
//!   }]
//! }
//! ```
//!
//! Cues within a track must be sorted, non-overlapping, positive-length and
//! inside the video's duration.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Platform, PlatformError, RawMedia, SearchPage, SearchQuery};
use crate::download::webvtt;
use crate::model::{Cue, SubtitleDescriptor, SubtitleKind, VideoRecord};

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error("cannot read world file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid world JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid world: {0}")]
    Invalid(String),
}

fn default_sample_rate() -> u32 {
    48_000
}

fn default_channels() -> u16 {
    2
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldCue {
    pub start: f64,
    pub end: f64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spoken_text: Option<String>,
}

impl WorldCue {
    /// What is actually said during the cue.
    pub fn spoken(&self) -> &str {
        self.spoken_text.as_deref().unwrap_or(&self.text)
    }

    pub fn to_cue(&self) -> Cue {
        Cue {
            start: self.start,
            end: self.end,
            text: self.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldTrack {
    pub language: String,
    pub kind: SubtitleKind,
    #[serde(default, skip_serializing_if = "is_false")]
    pub malformed: bool,
    pub cues: Vec<WorldCue>,
}

impl WorldTrack {
    pub fn descriptor(&self) -> SubtitleDescriptor {
        SubtitleDescriptor {
            language: self.language.clone(),
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldVideo {
    pub id: String,
    pub channel_id: String,
    pub title_keywords: Vec<String>,
    pub license_cc: bool,
    pub duration_s: f64,
    pub audio_seed: u64,
    #[serde(default = "default_sample_rate")]
    pub media_sample_rate: u32,
    #[serde(default = "default_channels")]
    pub media_channels: u16,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub acoustic_noise: f64,
    #[serde(default)]
    pub subtitle_tracks: Vec<WorldTrack>,
}

impl WorldVideo {
    pub fn record(&self) -> VideoRecord {
        VideoRecord {
            id: self.id.clone(),
            channel_id: self.channel_id.clone(),
            duration_s: self.duration_s,
            license_cc: self.license_cc,
            subtitles: self.subtitle_tracks.iter().map(|t| t.descriptor()).collect(),
            title_keywords: self.title_keywords.clone(),
        }
    }

    pub fn track(&self, language: &str, kind: SubtitleKind) -> Option<&WorldTrack> {
        self.subtitle_tracks
            .iter()
            .find(|t| t.language == language && t.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub page_size: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_channels: Vec<String>,
    pub videos: Vec<WorldVideo>,
}

impl WorldSpec {
    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| WorldError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("world spec always serializes")
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |msg: String| Err(WorldError::Invalid(msg));
        if self.page_size == 0 {
            return bad("page_size must be >= 1".into());
        }
        let mut ids = HashSet::new();
        for v in &self.videos {
            if v.id.is_empty() || v.channel_id.is_empty() {
                return bad(format!("video `{}` has an empty id or channel id", v.id));
            }
            if !ids.insert(v.id.as_str()) {
                return bad(format!("duplicate video id `{}`", v.id));
            }
            if !(v.duration_s > 0.0) || !v.duration_s.is_finite() {
                return bad(format!("video `{}` has non-positive duration", v.id));
            }
            if v.media_sample_rate == 0 || v.media_channels == 0 {
                return bad(format!("video `{}` has an empty media format", v.id));
            }
            if !(0.0..=1.0).contains(&v.acoustic_noise) {
                return bad(format!("video `{}` acoustic_noise outside [0, 1]", v.id));
            }
            for t in &v.subtitle_tracks {
                if t.language.is_empty() {
                    return bad(format!("video `{}` has a track without language", v.id));
                }
                let mut prev_end = 0.0;
                for c in &t.cues {
                    if !(c.start >= prev_end && c.end > c.start && c.end <= v.duration_s) {
                        return bad(format!(
                            "video `{}` track {}/{} has a cue out of order or range at {}",
                            v.id, t.language, t.kind, c.start
                        ));
                    }
                    prev_end = c.end;
                }
            }
        }
        Ok(())
    }
}

/// Continuation tokens are opaque to callers; internally they carry the
/// offset of the next page.
fn encode_token(offset: usize) -> String {
    format!("ct{offset:x}")
}

fn decode_token(token: &str) -> Result<usize, PlatformError> {
    token
        .strip_prefix("ct")
        .and_then(|hex| usize::from_str_radix(hex, 16).ok())
        .ok_or_else(|| PlatformError::InvalidContinuation(token.to_string()))
}

fn paginate(ids: &[&str], page_size: usize, continuation: Option<&str>) -> Result<SearchPage, PlatformError> {
    let offset = continuation.map(decode_token).transpose()?.unwrap_or(0);
    let end = (offset + page_size).min(ids.len());
    let page = if offset < ids.len() {
        ids[offset..end].iter().map(|s| s.to_string()).collect()
    } else {
        Vec::new()
    };
    Ok(SearchPage {
        video_ids: page,
        continuation: (end < ids.len()).then(|| encode_token(end)),
    })
}

/// The simulator. Read-only after construction.
#[derive(Debug, Clone)]
pub struct SimPlatform {
    world: WorldSpec,
    by_id: HashMap<String, usize>,
    by_channel: HashMap<String, Vec<usize>>,
}

impl SimPlatform {
    pub fn new(world: WorldSpec) -> Result<Self, WorldError> {
        world.validate()?;
        let by_id = world
            .videos
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.clone(), i))
            .collect();
        let mut by_channel: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, v) in world.videos.iter().enumerate() {
            by_channel.entry(v.channel_id.clone()).or_default().push(i);
        }
        for ch in &world.extra_channels {
            by_channel.entry(ch.clone()).or_default();
        }
        Ok(Self {
            world,
            by_id,
            by_channel,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        Self::new(WorldSpec::load(path)?)
    }

    pub fn world(&self) -> &WorldSpec {
        &self.world
    }

    pub fn video(&self, id: &str) -> Result<&WorldVideo, PlatformError> {
        self.by_id
            .get(id)
            .map(|&i| &self.world.videos[i])
            .ok_or_else(|| PlatformError::not_found("video", id))
    }

    /// Ranked matches for `query`: keyword occurrence count descending, then id.
    fn ranked_matches(&self, query: &SearchQuery) -> Vec<&str> {
        let mut hits: Vec<(usize, &str)> = self
            .world
            .videos
            .iter()
            .filter(|v| !query.require_cc_license || v.license_cc)
            .filter(|v| !query.require_subtitles || !v.subtitle_tracks.is_empty())
            .filter_map(|v| {
                let n = v
                    .title_keywords
                    .iter()
                    .filter(|k| **k == query.keyword)
                    .count();
                (n > 0).then_some((n, v.id.as_str()))
            })
            .collect();
        hits.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        hits.into_iter().map(|(_, id)| id).collect()
    }

    /// Seeded tones plus low-level noise, in the video's native format.
    pub fn synthesize_media(video: &WorldVideo) -> RawMedia {
        let rate = video.media_sample_rate;
        let channels = video.media_channels as usize;
        let frames = (video.duration_s * rate as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(video.audio_seed);
        let f0 = 110.0 + (video.audio_seed % 400) as f64;
        let f1 = f0 * 1.5;
        let step = std::f64::consts::TAU / rate as f64;
        let mut samples = Vec::with_capacity(frames * channels);
        for n in 0..frames {
            let t = n as f64 * step;
            let tone = 0.25 * (f0 * t).sin() + 0.1 * (f1 * t).sin();
            for _ in 0..channels {
                let noise: f64 = rng.random_range(-0.03..0.03);
                let s = ((tone + noise) * i16::MAX as f64).round();
                samples.push(s.clamp(i16::MIN as f64, i16::MAX as f64) as i16);
            }
        }
        RawMedia {
            sample_rate: rate,
            channels: video.media_channels,
            samples,
        }
    }
}

impl Platform for SimPlatform {
    fn search(
        &self,
        query: &SearchQuery,
        continuation: Option<&str>,
    ) -> Result<SearchPage, PlatformError> {
        if query.keyword.is_empty() {
            return Err(PlatformError::InvalidRequest("empty keyword".into()));
        }
        paginate(&self.ranked_matches(query), self.world.page_size, continuation)
    }

    fn video_metadata(&self, id: &str) -> Result<VideoRecord, PlatformError> {
        self.video(id).map(WorldVideo::record)
    }

    fn channel_videos(
        &self,
        channel_id: &str,
        continuation: Option<&str>,
    ) -> Result<SearchPage, PlatformError> {
        let idx = self
            .by_channel
            .get(channel_id)
            .ok_or_else(|| PlatformError::not_found("channel", channel_id))?;
        let ids: Vec<&str> = idx.iter().map(|&i| self.world.videos[i].id.as_str()).collect();
        paginate(&ids, self.world.page_size, continuation)
    }

    fn media(&self, id: &str) -> Result<RawMedia, PlatformError> {
        self.video(id).map(Self::synthesize_media)
    }

    fn subtitle(
        &self,
        id: &str,
        language: &str,
        kind: SubtitleKind,
    ) -> Result<String, PlatformError> {
        let video = self.video(id)?;
        let track = video
            .track(language, kind)
            .ok_or_else(|| PlatformError::not_found("subtitle track", &format!("{id}/{language}/{kind}")))?;
        let cues: Vec<Cue> = track.cues.iter().map(WorldCue::to_cue).collect();
        let body = webvtt::render(&cues);
        if track.malformed {
            // Break the first timing line the way hand-edited files often are.
            return Ok(body.replacen(" --> ", " -> ", 1).replacen('.', ",", 1));
        }
        Ok(body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(id: &str, channel: &str, kws: &[&str], cc: bool, subs: bool) -> WorldVideo {
        WorldVideo {
            id: id.into(),
            channel_id: channel.into(),
            title_keywords: kws.iter().map(|s| s.to_string()).collect(),
            license_cc: cc,
            duration_s: 4.0,
            audio_seed: 1,
            media_sample_rate: 16_000,
            media_channels: 1,
            acoustic_noise: 0.0,
            subtitle_tracks: if subs {
                vec![WorldTrack {
                    language: "en".into(),
                    kind: SubtitleKind::Manual,
                    malformed: false,
                    cues: vec![WorldCue {
                        start: 0.5,
                        end: 2.0,
                        text: "hello there".into(),
                        spoken_text: None,
                    }],
                }]
            } else {
                vec![]
            },
        }
    }

    fn world(videos: Vec<WorldVideo>, page_size: usize) -> SimPlatform {
        SimPlatform::new(WorldSpec {
            page_size,
            extra_channels: vec!["empty".into()],
            videos,
        })
        .unwrap()
    }

    fn crawl_all(p: &SimPlatform, q: &SearchQuery) -> Vec<SearchPage> {
        let mut pages = vec![p.search(q, None).unwrap()];
        while let Some(tok) = pages.last().unwrap().continuation.clone() {
            pages.push(p.search(q, Some(&tok)).unwrap());
        }
        pages
    }

    #[test]
    fn no_cc_video_means_empty_page() {
        let p = world(vec![video("a", "c", &["kw"], false, true)], 10);
        let page = p.search(&SearchQuery::filtered("kw"), None).unwrap();
        assert_eq!(page, SearchPage::default());
    }

    #[test]
    fn pages_of_ten_ten_five() {
        let videos = (0..25)
            .map(|i| video(&format!("v{i:02}"), "c", &["kw"], true, true))
            .collect();
        let p = world(videos, 10);
        let pages = crawl_all(&p, &SearchQuery::filtered("kw"));
        let sizes: Vec<_> = pages.iter().map(|p| p.video_ids.len()).collect();
        assert_eq!(sizes, [10, 10, 5]);
        assert!(pages[0].continuation.is_some());
        assert!(pages[1].continuation.is_some());
        assert!(pages[2].continuation.is_none());
        // Determinism.
        assert_eq!(pages, crawl_all(&p, &SearchQuery::filtered("kw")));
    }

    #[test]
    fn ranking_by_occurrence_then_id() {
        let p = world(
            vec![
                video("b", "c", &["kw"], true, true),
                video("a", "c", &["kw"], true, true),
                video("z", "c", &["kw", "kw"], true, true),
                video("n", "c", &["other"], true, true),
            ],
            10,
        );
        let page = p.search(&SearchQuery::filtered("kw"), None).unwrap();
        assert_eq!(page.video_ids, ["z", "a", "b"]);
    }

    #[test]
    fn subtitle_filter_is_exact() {
        let p = world(
            vec![
                video("a", "c", &["kw"], true, false),
                video("b", "c", &["kw"], true, true),
            ],
            10,
        );
        let q = SearchQuery::filtered("kw");
        assert_eq!(p.search(&q, None).unwrap().video_ids, ["b"]);
        let loose = SearchQuery {
            require_subtitles: false,
            ..q
        };
        assert_eq!(p.search(&loose, None).unwrap().video_ids, ["a", "b"]);
    }

    #[test]
    fn channel_listing_and_lookups() {
        let p = world(
            vec![
                video("v2", "c1", &[], true, true),
                video("v1", "c1", &[], true, true),
                video("v3", "c2", &[], true, true),
            ],
            1,
        );
        let first = p.channel_videos("c1", None).unwrap();
        assert_eq!(first.video_ids, ["v2"]);
        let second = p
            .channel_videos("c1", first.continuation.as_deref())
            .unwrap();
        assert_eq!(second.video_ids, ["v1"]);
        assert!(second.continuation.is_none());
        assert_eq!(p.channel_videos("empty", None).unwrap(), SearchPage::default());
        assert!(matches!(
            p.channel_videos("nope", None),
            Err(PlatformError::NotFound { .. })
        ));
        assert!(matches!(
            p.video_metadata("nope"),
            Err(PlatformError::NotFound { .. })
        ));
        assert!(matches!(
            p.search(&SearchQuery::filtered("x"), Some("garbage")),
            Err(PlatformError::InvalidContinuation(_))
        ));
        assert_eq!(p.video_metadata("v3").unwrap().channel_id, "c2");
    }

    #[test]
    fn media_matches_declared_duration() {
        let p = world(vec![video("a", "c", &[], true, true)], 10);
        let m = p.media("a").unwrap();
        assert_eq!(m.sample_rate, 16_000);
        assert_eq!(m.frames(), 64_000);
        assert_eq!(m, p.media("a").unwrap());
    }

    #[test]
    fn subtitle_renders_webvtt() {
        let p = world(vec![video("a", "c", &[], true, true)], 10);
        let body = p.subtitle("a", "en", SubtitleKind::Manual).unwrap();
        assert_eq!(body, "WEBVTT\n\n00:00:00.500 --> 00:00:02.000\nhello there\n");
        assert!(p.subtitle("a", "fr", SubtitleKind::Manual).is_err());
    }

    #[test]
    fn validation_rejects_bad_worlds() {
        let mut dup = WorldSpec {
            page_size: 10,
            extra_channels: vec![],
            videos: vec![video("a", "c", &[], true, true), video("a", "c", &[], true, true)],
        };
        assert!(dup.validate().is_err());
        dup.videos.pop();
        dup.videos[0].subtitle_tracks[0].cues[0].end = 10.0;
        assert!(dup.validate().is_err());
        dup.videos[0].subtitle_tracks[0].cues[0].end = 0.2;
        assert!(dup.validate().is_err());
        dup.videos[0].subtitle_tracks[0].cues[0].end = 1.0;
        assert!(dup.validate().is_ok());
        dup.page_size = 0;
        assert!(dup.validate().is_err());
    }
}
