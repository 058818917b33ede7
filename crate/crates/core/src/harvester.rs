//! Keyword harvesting from per-language text dumps.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::coordinator::{ClientError, CoordinatorClient, ResourceKind};
use crate::report::Table;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct KeywordEntry {
    pub keyword: String,
    pub language: String,
    pub source_doc: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HarvestDiagnostics {
    pub lines_read: usize,
    pub lines_skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LanguageDistribution {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
}

impl LanguageDistribution {
    /// `(language, count)` by count descending, then language.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut rows: Vec<_> = self.counts.iter().map(|(l, &c)| (l.as_str(), c)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        rows
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["language", "unique_keyword_count"]);
        for (lang, count) in self.ranked() {
            t.push([lang.to_string(), count.to_string()]);
        }
        t
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace()
        || (c.is_ascii() && !c.is_ascii_alphanumeric())
        || matches!(c,
            '\u{00A1}'..='\u{00BF}'
            | '\u{00D7}' | '\u{00F7}'
            | '\u{2000}'..='\u{206F}'
            | '\u{3000}'..='\u{303F}'
            | '\u{FF01}'..='\u{FF0F}'
            | '\u{FF1A}'..='\u{FF20}'
            | '\u{FF3B}'..='\u{FF40}'
            | '\u{FF5B}'..='\u{FF65}')
}

/// Splits on whitespace and punctuation, lowercases, and drops tokens shorter
/// than two characters or made only of digits.
pub fn tokenize(line: &str) -> impl Iterator<Item = String> + '_ {
    line.split(is_separator)
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2 && !t.chars().all(|c| c.is_numeric()))
}

/// Unique keywords of `bytes` (one document per line). Lines that are not
/// valid UTF-8 are skipped and counted.
pub fn extract_keywords(
    bytes: &[u8],
    language: &str,
    source_doc: Option<&str>,
) -> (BTreeSet<KeywordEntry>, HarvestDiagnostics) {
    let mut out = BTreeSet::new();
    let mut diag = HarvestDiagnostics::default();
    for raw in bytes.split(|&b| b == b'\n') {
        if raw.is_empty() {
            continue;
        }
        diag.lines_read += 1;
        let Ok(line) = std::str::from_utf8(raw) else {
            diag.lines_skipped += 1;
            continue;
        };
        for keyword in tokenize(line) {
            out.insert(KeywordEntry {
                keyword,
                language: language.to_string(),
                source_doc: source_doc.map(str::to_string),
            });
        }
    }
    (out, diag)
}

pub fn language_distribution<'a>(
    entries: impl IntoIterator<Item = &'a KeywordEntry>,
) -> LanguageDistribution {
    let unique: BTreeSet<(&str, &str)> = entries
        .into_iter()
        .map(|e| (e.language.as_str(), e.keyword.as_str()))
        .collect();
    let mut dist = LanguageDistribution::default();
    for (lang, _) in unique {
        *dist.counts.entry(lang.to_string()).or_default() += 1;
        dist.total += 1;
    }
    dist
}

/// Rarer languages first; ties by `(language, keyword)`.
///
/// # Panics
/// If an entry's language is missing from `distribution`.
pub fn prioritize(entries: &[KeywordEntry], distribution: &LanguageDistribution) -> Vec<KeywordEntry> {
    let count = |e: &KeywordEntry| {
        *distribution
            .counts
            .get(&e.language)
            .unwrap_or_else(|| panic!("language `{}` missing from distribution", e.language))
    };
    let mut out = entries.to_vec();
    out.sort_by(|a, b| {
        count(a)
            .cmp(&count(b))
            .then_with(|| a.language.cmp(&b.language))
            .then_with(|| a.keyword.cmp(&b.keyword))
            .then_with(|| a.source_doc.cmp(&b.source_doc))
    });
    out
}

/// Adds up to `limit` keywords as Keyword resources. Returns how many were
/// newly created; repeats are absorbed by coordinator dedup.
pub fn feed_coordinator(
    queue: &[KeywordEntry],
    client: &dyn CoordinatorClient,
    limit: Option<usize>,
) -> Result<usize, ClientError> {
    let mut created = 0;
    for entry in queue.iter().take(limit.unwrap_or(usize::MAX)) {
        if client.add_resource(ResourceKind::Keyword, &entry.keyword)?.created {
            created += 1;
        }
    }
    Ok(created)
}

#[derive(Debug, Clone, Default)]
pub struct Harvest {
    pub entries: BTreeSet<KeywordEntry>,
    pub diagnostics: BTreeMap<String, HarvestDiagnostics>,
}

/// Reads every `<lang>.txt` in `dir`.
pub fn harvest_dir(dir: &Path) -> std::io::Result<Harvest> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut harvest = Harvest::default();
    for path in paths {
        let Some(lang) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let bytes = std::fs::read(&path)?;
        let name = path.file_name().and_then(|s| s.to_str());
        let (entries, diag) = extract_keywords(&bytes, lang, name);
        harvest.entries.extend(entries);
        harvest.diagnostics.insert(lang.to_string(), diag);
    }
    Ok(harvest)
}
