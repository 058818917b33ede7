//! Alignment-score filtering of subtitle/audio pairs and corpus analytics.
//!
//! Scores are per-label CTC losses; lower means better alignment. Filtering
//! keeps `score <= threshold`. Capping only ever applies to reporting copies.

pub mod ctc;
pub mod stats;

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::download::{webvtt, ManifestRecord, Subset};
use crate::platform::acoustic::{CueRef, SimAcousticModel};
use crate::report::{num, Table};

pub use ctc::{ctc_log_loss, CtcError, CtcScore};
pub use stats::{
    detect_scripts, duration_stats, language_hours, summarize, text_length_stats, StatsSummary,
};

pub const DEFAULT_THRESHOLD: f64 = 2.0;
pub const DEFAULT_CAP: f64 = 20.0;
pub const SWEEP_CAP: f64 = 16.0;
pub const DEFAULT_TRAIN_MAX: usize = 1_000_000;
pub const DEFAULT_TEST_SIZE: usize = 1_000;
pub const HISTOGRAM_BIN_WIDTH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtterancePair {
    pub video_id: String,
    pub cue_index: usize,
    pub language: String,
    pub subset: Subset,
    pub duration: f64,
    pub transcript: String,
    pub score: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("{0}")]
    Validation(String),
    #[error("reading {path}: {message}")]
    Input { path: String, message: String },
}

/// Turns labeled manifest records into one pair per subtitle cue.
pub fn pairs_from_manifest(
    records: &[ManifestRecord],
    root: &Path,
) -> Result<Vec<UtterancePair>, CurationError> {
    let mut out = Vec::new();
    for r in records {
        let (Some(language), Some(sub)) = (&r.language, &r.subtitle_path) else {
            continue;
        };
        let path = root.join(sub);
        let input_err = |message: String| CurationError::Input {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(&path).map_err(|e| input_err(e.to_string()))?;
        let cues = webvtt::parse(&text).map_err(|e| input_err(e.to_string()))?;
        for (i, cue) in cues.into_iter().enumerate() {
            out.push(UtterancePair {
                video_id: r.video_id.clone(),
                cue_index: i,
                language: language.clone(),
                subset: r.subset,
                duration: cue.duration(),
                transcript: cue.text,
                score: None,
            });
        }
    }
    Ok(out)
}

pub trait Scorer: Sync {
    /// `None` leaves the pair unscored.
    fn score(&self, pair: &UtterancePair) -> Option<f64>;
}

/// CTC loss of the transcript under the simulated acoustic model.
#[derive(Debug, Clone)]
pub struct CtcScorer {
    pub model: SimAcousticModel,
}

impl Scorer for CtcScorer {
    fn score(&self, pair: &UtterancePair) -> Option<f64> {
        let kind = pair.subset.subtitle_kind()?;
        let cue = CueRef {
            video_id: pair.video_id.clone(),
            language: pair.language.clone(),
            kind,
            cue_index: pair.cue_index,
        };
        let posteriors = self.model.posteriors(&cue).ok()?;
        let labels = self.model.vocabulary().encode(&pair.transcript);
        match ctc_log_loss(&posteriors, &labels) {
            Ok(s) => Some(s.loss),
            Err(CtcError::EmptyLabels) => None,
            Err(e) => {
                tracing::warn!(video = %pair.video_id, cue = pair.cue_index, error = %e, "unscorable pair");
                None
            }
        }
    }
}

/// Scores every pair, splitting the work across threads. Output order
/// follows input order.
pub fn score_corpus(pairs: &[UtterancePair], scorer: &dyn Scorer) -> Vec<UtterancePair> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let chunk = pairs.len().div_ceil(threads).max(1);
    let mut out = Vec::with_capacity(pairs.len());
    std::thread::scope(|s| {
        let handles: Vec<_> = pairs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|p| UtterancePair {
                            score: scorer.score(p),
                            ..p.clone()
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            out.extend(h.join().expect("scoring thread panicked"));
        }
    });
    out
}

/// Copies with `score = min(score, cap)`. Infinite scores become `cap`.
pub fn cap_scores(pairs: &[UtterancePair], cap: f64) -> Vec<UtterancePair> {
    pairs
        .iter()
        .map(|p| UtterancePair {
            score: p.score.map(|s| s.min(cap)),
            ..p.clone()
        })
        .collect()
}

pub fn passes(pair: &UtterancePair, threshold: f64) -> bool {
    pair.score.is_some_and(|s| s.is_finite() && s <= threshold)
}

/// Pairs with a finite score no greater than `threshold`.
pub fn filter_by_threshold(pairs: &[UtterancePair], threshold: f64) -> Vec<UtterancePair> {
    pairs.iter().filter(|p| passes(p, threshold)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub cap: f64,
    pub thresholds: Vec<f64>,
    pub kept_counts: Vec<usize>,
    pub kept_hours: Vec<f64>,
}

impl SweepReport {
    pub fn to_table(&self) -> Table {
        let mut t =
            Table::new(["threshold", "kept_count", "kept_hours"]).comment(format!("cap={}", self.cap));
        for i in 0..self.thresholds.len() {
            t.push([
                format!("{}", self.thresholds[i]),
                self.kept_counts[i].to_string(),
                num(self.kept_hours[i]),
            ]);
        }
        t
    }
}

/// Filters capped copies of `pairs` once per threshold. Thresholds are
/// sorted ascending first.
pub fn threshold_sweep(pairs: &[UtterancePair], thresholds: &[f64], cap: f64) -> SweepReport {
    let capped = cap_scores(pairs, cap);
    let mut ts = thresholds.to_vec();
    ts.sort_by(f64::total_cmp);
    let mut kept_counts = Vec::with_capacity(ts.len());
    let mut kept_hours = Vec::with_capacity(ts.len());
    for &t in &ts {
        let kept: Vec<_> = capped.iter().filter(|p| passes(p, t)).collect();
        kept_counts.push(kept.len());
        kept_hours.push(kept.iter().map(|p| p.duration).sum::<f64>() / 3600.0);
    }
    SweepReport {
        cap,
        thresholds: ts,
        kept_counts,
        kept_hours,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Splits {
    pub train: Vec<UtterancePair>,
    pub test: Vec<UtterancePair>,
}

/// Seeded shuffle of the pairs (canonically ordered first), then the first
/// `test_size` form the test set and up to `train_max` of the rest the
/// training set.
pub fn sample_splits(
    pairs: &[UtterancePair],
    train_max: usize,
    test_size: usize,
    seed: u64,
) -> Result<Splits, CurationError> {
    if test_size >= pairs.len() {
        return Err(CurationError::Validation(format!(
            "test size {test_size} needs more than {} pairs",
            pairs.len()
        )));
    }
    let mut order: Vec<&UtterancePair> = pairs.iter().collect();
    order.sort_by(|a, b| {
        (&a.video_id, a.cue_index, &a.language, a.subset)
            .cmp(&(&b.video_id, b.cue_index, &b.language, b.subset))
    });
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order[..test_size].iter().map(|p| (*p).clone()).collect();
    let train = order[test_size..]
        .iter()
        .take(train_max)
        .map(|p| (*p).clone())
        .collect();
    Ok(Splits { train, test })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

/// Score-duration scatter rows plus score histogram, on capped scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreDurationReport {
    pub cap: f64,
    pub rows: Vec<(String, usize, f64, f64)>,
    pub histogram: Vec<HistogramBin>,
}

impl ScoreDurationReport {
    pub fn scatter_table(&self) -> Table {
        let mut t = Table::new(["video_id", "cue_index", "duration", "score"])
            .comment(format!("cap={}", self.cap));
        for (v, i, d, s) in &self.rows {
            t.push([v.clone(), i.to_string(), num(*d), num(*s)]);
        }
        t
    }

    pub fn histogram_table(&self) -> Table {
        let mut t = Table::new(["bin_start", "bin_end", "count"])
            .comment(format!("cap={}", self.cap))
            .comment(format!("bin_width={}", HISTOGRAM_BIN_WIDTH));
        for b in &self.histogram {
            t.push([num(b.start), num(b.end), b.count.to_string()]);
        }
        t
    }
}

/// Bins are `[k, k + 1)` from 0 up to the cap; the last bin is closed so
/// that capped scores land in it.
pub fn score_duration_report(pairs: &[UtterancePair], cap: f64) -> ScoreDurationReport {
    let capped = cap_scores(pairs, cap);
    let rows: Vec<_> = capped
        .iter()
        .filter_map(|p| p.score.map(|s| (p.video_id.clone(), p.cue_index, p.duration, s)))
        .collect();
    let n_bins = ((cap / HISTOGRAM_BIN_WIDTH).ceil() as usize).max(1);
    let mut histogram: Vec<HistogramBin> = (0..n_bins)
        .map(|k| HistogramBin {
            start: k as f64 * HISTOGRAM_BIN_WIDTH,
            end: ((k + 1) as f64 * HISTOGRAM_BIN_WIDTH).min(cap.max(HISTOGRAM_BIN_WIDTH)),
            count: 0,
        })
        .collect();
    for (_, _, _, s) in &rows {
        let k = ((s.max(0.0) / HISTOGRAM_BIN_WIDTH).floor() as usize).min(n_bins - 1);
        histogram[k].count += 1;
    }
    ScoreDurationReport {
        cap,
        rows,
        histogram,
    }
}
