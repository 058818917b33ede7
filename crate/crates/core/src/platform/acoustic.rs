//! Simulated acoustic model: per-frame symbol posteriors for a cue, peaked
//! on what is actually spoken and blurred by a corruption level.
//!
//! Frames run at 25 per second. The target alignment gives each spoken symbol
//! one frame followed by one blank frame, and spreads spare frames randomly as
//! extra blanks or symbol repeats. Each frame puts a random peak mass in
//! `[0.85, 0.97]` on its target symbol and spreads the rest evenly. Corruption
//! `c` then mixes every row with the uniform distribution:
//! `(1 - c) * row + c / V`.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_script::{Script, UnicodeScript};

use super::{PlatformError, SimPlatform, WorldSpec};
use crate::model::SubtitleKind;

pub const BLANK: usize = 0;
pub const UNKNOWN: usize = 1;
pub const FRAME_RATE: f64 = 25.0;
const PEAK_RANGE: (f64, f64) = (0.85, 0.97);

/// Letters, digits, and marks that belong to a script (vowel signs, nukta).
fn is_spoken_char(c: char) -> bool {
    c.is_alphanumeric() || !matches!(c.script(), Script::Common | Script::Unknown)
}

/// Lowercases, keeps letters, digits and combining vowel signs, and collapses
/// whitespace to single spaces. Punctuation and brackets are dropped.
pub fn normalize_transcript(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else if is_spoken_char(c) {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// Symbol inventory: blank, unknown, then characters in code point order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    chars: Vec<char>,
}

impl Vocabulary {
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let set: BTreeSet<char> = texts
            .into_iter()
            .flat_map(|t| normalize_transcript(t).chars().collect::<Vec<_>>())
            .collect();
        Self {
            chars: set.into_iter().collect(),
        }
    }

    /// Every cue text and spoken text in the world.
    pub fn from_world(world: &WorldSpec) -> Self {
        Self::from_texts(
            world
                .videos
                .iter()
                .flat_map(|v| &v.subtitle_tracks)
                .flat_map(|t| &t.cues)
                .flat_map(|c| [c.text.as_str(), c.spoken()]),
        )
    }

    pub fn len(&self) -> usize {
        self.chars.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbol(&self, c: char) -> usize {
        self.chars.binary_search(&c).map_or(UNKNOWN, |i| i + 2)
    }

    /// Symbols of the normalized transcript.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        normalize_transcript(text).chars().map(|c| self.symbol(c)).collect()
    }
}

/// Row-major `frames x symbols` probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriors {
    frames: usize,
    symbols: usize,
    data: Vec<f64>,
}

impl Posteriors {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        let symbols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != symbols) {
            return Err("ragged posterior rows".into());
        }
        Ok(Self {
            frames: rows.len(),
            symbols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.symbols..(t + 1) * self.symbols]
    }

    pub fn argmax_path(&self) -> Vec<usize> {
        (0..self.frames)
            .map(|t| {
                let row = self.row(t);
                (0..row.len())
                    .max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a)))
                    .unwrap_or(BLANK)
            })
            .collect()
    }
}

/// Collapses a frame path: merge repeats, then drop blanks.
pub fn collapse(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &s in path {
        if Some(s) != prev && s != BLANK {
            out.push(s);
        }
        prev = Some(s);
    }
    out
}

/// Frame-level target for `labels` over `frames` frames (at least `2n + 1`).
fn target_path(labels: &[usize], frames: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = labels.len();
    // Slot 0 is leading silence; slot k + 1 follows label k.
    let mut extra = vec![0usize; n + 1];
    for _ in 0..frames - 2 * n {
        extra[rng.random_range(0..=n)] += 1;
    }
    let mut path = Vec::with_capacity(frames);
    path.extend(std::iter::repeat_n(BLANK, extra[0]));
    for (k, &l) in labels.iter().enumerate() {
        // Spare frames after a label extend the symbol or the following blank.
        let hold = rng.random_range(0..=extra[k + 1]);
        path.extend(std::iter::repeat_n(l, 1 + hold));
        path.extend(std::iter::repeat_n(BLANK, 1 + extra[k + 1] - hold));
    }
    path
}

/// Posteriors for `labels` spoken over `duration_s` seconds.
pub fn synthesize(
    labels: &[usize],
    symbols: usize,
    duration_s: f64,
    corruption: f64,
    seed: u64,
) -> Posteriors {
    assert!(symbols >= 2, "need at least blank and one symbol");
    let corruption = corruption.clamp(0.0, 1.0);
    let frames = ((duration_s * FRAME_RATE).round() as usize).max(2 * labels.len() + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let path = target_path(labels, frames, &mut rng);
    let v = symbols as f64;
    let mut data = Vec::with_capacity(frames * symbols);
    for &target in &path {
        let peak = rng.random_range(PEAK_RANGE.0..PEAK_RANGE.1);
        let rest = (1.0 - peak) / (v - 1.0);
        let start = data.len();
        for s in 0..symbols {
            let p = if s == target { peak } else { rest };
            data.push((1.0 - corruption) * p + corruption / v);
        }
        let row = &mut data[start..];
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= sum);
    }
    Posteriors {
        frames,
        symbols,
        data,
    }
}

/// Identifies one cue of one subtitle track.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CueRef {
    pub video_id: String,
    pub language: String,
    pub kind: SubtitleKind,
    pub cue_index: usize,
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for &b in *part {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Acoustic model over a simulated world.
#[derive(Debug, Clone)]
pub struct SimAcousticModel {
    platform: Arc<SimPlatform>,
    vocabulary: Vocabulary,
    corruption: f64,
}

impl SimAcousticModel {
    pub fn new(platform: Arc<SimPlatform>, corruption: f64) -> Self {
        let vocabulary = Vocabulary::from_world(platform.world());
        Self {
            platform,
            vocabulary,
            corruption,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn corruption(&self) -> f64 {
        self.corruption
    }

    /// Combined corruption of the model and the video's background noise.
    pub fn effective_corruption(&self, acoustic_noise: f64) -> f64 {
        1.0 - (1.0 - self.corruption) * (1.0 - acoustic_noise)
    }

    pub fn posteriors(&self, cue: &CueRef) -> Result<Posteriors, PlatformError> {
        let video = self.platform.video(&cue.video_id)?;
        let track = video.track(&cue.language, cue.kind).ok_or_else(|| {
            PlatformError::not_found("subtitle track", &format!("{}/{}/{}", cue.video_id, cue.language, cue.kind))
        })?;
        let wc = track.cues.get(cue.cue_index).ok_or_else(|| {
            PlatformError::not_found("cue", &format!("{}#{}", cue.video_id, cue.cue_index))
        })?;
        let labels = self.vocabulary.encode(wc.spoken());
        let seed = fnv1a(&[
            &video.audio_seed.to_le_bytes(),
            cue.language.as_bytes(),
            cue.kind.as_str().as_bytes(),
            &(cue.cue_index as u64).to_le_bytes(),
        ]);
        Ok(synthesize(
            &labels,
            self.vocabulary.len(),
            wc.end - wc.start,
            self.effective_corruption(video.acoustic_noise),
            seed,
        ))
    }
}
