//! Corpus statistics: summaries, per-language hours and writing systems.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use unicode_script::{Script, UnicodeScript};

use crate::download::{ManifestRecord, Subset};
use crate::report::{num, Table};

/// Population statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

/// Single-pass (Welford) summary; `None` for no values.
pub fn summarize(values: impl IntoIterator<Item = f64>) -> Option<StatsSummary> {
    let mut count = 0usize;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for x in values {
        count += 1;
        let delta = x - mean;
        mean += delta / count as f64;
        m2 += delta * (x - mean);
        min = min.min(x);
        max = max.max(x);
    }
    (count > 0).then(|| StatsSummary {
        count,
        mean,
        std: (m2 / count as f64).max(0.0).sqrt(),
        min,
        max,
    })
}

pub fn duration_stats(values: &[f64]) -> Option<StatsSummary> {
    summarize(values.iter().copied())
}

/// Lengths in Unicode scalar values.
pub fn text_length_stats<S: AsRef<str>>(transcripts: &[S]) -> Option<StatsSummary> {
    summarize(transcripts.iter().map(|t| t.as_ref().chars().count() as f64))
}

pub const STAT_ROWS: [&str; 4] = ["Mean", "Std", "Min", "Max"];

/// One column per named summary, rows Mean/Std/Min/Max. Columns without
/// data stay blank; a table with no data at all has no rows.
pub fn stats_table(columns: &[(&str, Option<StatsSummary>)]) -> Table {
    let mut t = Table::new(std::iter::once("statistic").chain(columns.iter().map(|c| c.0)));
    if columns.iter().all(|c| c.1.is_none()) {
        return t;
    }
    for (i, label) in STAT_ROWS.iter().enumerate() {
        let mut row = vec![label.to_string()];
        for (_, s) in columns {
            row.push(s.map_or(String::new(), |s| num([s.mean, s.std, s.min, s.max][i])));
        }
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SubsetHours {
    pub manual: f64,
    pub automatic: f64,
}

impl SubsetHours {
    pub fn total(&self) -> f64 {
        self.manual + self.automatic
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LanguageHours {
    pub by_language: BTreeMap<String, SubsetHours>,
    /// Audio without a language label.
    pub unlabeled: f64,
}

impl LanguageHours {
    pub fn total(&self) -> f64 {
        self.by_language.values().map(SubsetHours::total).sum::<f64>() + self.unlabeled
    }

    /// Languages by combined hours descending, then tag.
    pub fn ranked(&self) -> Vec<(&str, SubsetHours)> {
        let mut rows: Vec<_> = self.by_language.iter().map(|(l, h)| (l.as_str(), *h)).collect();
        rows.sort_by(|a, b| b.1.total().total_cmp(&a.1.total()).then(a.0.cmp(b.0)));
        rows
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["language", "manual_hours", "automatic_hours", "total_hours"])
            .comment(format!("unlabeled_hours={}", num(self.unlabeled)));
        for (lang, h) in self.ranked() {
            t.push([lang.to_string(), num(h.manual), num(h.automatic), num(h.total())]);
        }
        t
    }
}

pub fn language_hours(manifest: &[ManifestRecord]) -> LanguageHours {
    let mut out = LanguageHours::default();
    for r in manifest {
        let hours = r.duration / 3600.0;
        match (r.subset, &r.language) {
            (Subset::Manual, Some(l)) => out.by_language.entry(l.clone()).or_default().manual += hours,
            (Subset::Automatic, Some(l)) => {
                out.by_language.entry(l.clone()).or_default().automatic += hours
            }
            _ => out.unlabeled += hours,
        }
    }
    out
}

/// Writing systems distinguished in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WritingSystem {
    Latin,
    Cyrillic,
    Han,
    Hiragana,
    Katakana,
    Greek,
    Devanagari,
    Hangul,
    Malayalam,
    Arabic,
    Other,
}

impl WritingSystem {
    pub fn of(c: char) -> Self {
        match c.script() {
            Script::Latin => Self::Latin,
            Script::Cyrillic => Self::Cyrillic,
            Script::Han => Self::Han,
            Script::Hiragana => Self::Hiragana,
            Script::Katakana => Self::Katakana,
            Script::Greek => Self::Greek,
            Script::Devanagari => Self::Devanagari,
            Script::Hangul => Self::Hangul,
            Script::Malayalam => Self::Malayalam,
            Script::Arabic => Self::Arabic,
            _ => Self::Other,
        }
    }
}

impl fmt::Display for WritingSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScriptCount {
    pub script: WritingSystem,
    pub chars: usize,
    pub share: f64,
}

/// Character counts per writing system, most frequent first. Whitespace is
/// not counted; punctuation and symbols fall under `Other`.
pub fn detect_scripts<S: AsRef<str>>(transcripts: &[S]) -> Vec<ScriptCount> {
    let mut counts: BTreeMap<WritingSystem, usize> = BTreeMap::new();
    for t in transcripts {
        for c in t.as_ref().chars().filter(|c| !c.is_whitespace()) {
            *counts.entry(WritingSystem::of(c)).or_default() += 1;
        }
    }
    let total: usize = counts.values().sum();
    let mut out: Vec<_> = counts
        .into_iter()
        .map(|(script, chars)| ScriptCount {
            script,
            chars,
            share: chars as f64 / total as f64,
        })
        .collect();
    out.sort_by(|a, b| b.chars.cmp(&a.chars).then(a.script.cmp(&b.script)));
    out
}

pub fn scripts_table(scripts: &[ScriptCount]) -> Table {
    let mut t = Table::new(["rank", "script", "chars", "share"]);
    for (i, s) in scripts.iter().enumerate() {
        t.push([(i + 1).to_string(), s.script.to_string(), s.chars.to_string(), num(s.share)]);
    }
    t
}
