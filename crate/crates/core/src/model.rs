//! Domain types shared by the platform adapter, the download worker and curation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubtitleKind {
    /// Uploaded by the video's creator.
    Manual,
    /// Generated by the platform's recognizer.
    Automatic,
}

impl SubtitleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Manual => "manual",
            Self::Automatic => "automatic",
        }
    }
}

impl fmt::Display for SubtitleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubtitleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "manual" => Ok(Self::Manual),
            "automatic" => Ok(Self::Automatic),
            other => Err(format!("unknown subtitle kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubtitleDescriptor {
    pub language: String,
    pub kind: SubtitleKind,
}

impl SubtitleDescriptor {
    pub fn manual(language: &str) -> Self {
        Self {
            language: language.to_string(),
            kind: SubtitleKind::Manual,
        }
    }

    pub fn automatic(language: &str) -> Self {
        Self {
            language: language.to_string(),
            kind: SubtitleKind::Automatic,
        }
    }
}

/// A timed subtitle cue. Times are in seconds; `end > start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cue {
    pub start: f64,
    pub end: f64,
    pub text: String,
}

impl Cue {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Platform metadata for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub id: String,
    pub channel_id: String,
    pub duration_s: f64,
    pub license_cc: bool,
    pub subtitles: Vec<SubtitleDescriptor>,
    #[serde(default)]
    pub title_keywords: Vec<String>,
}
