//! WebVTT subset: a `WEBVTT` header line, a blank line, then cue blocks of
//! `HH:MM:SS.mmm --> HH:MM:SS.mmm` followed by text lines.
//!
//! Parsing repairs timing: cues are sorted by start, zero-length cues are
//! dropped and a cue overlapping its successor is cut at the successor's
//! start.

use crate::model::Cue;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VttError {
    #[error("missing WEBVTT header")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

fn malformed(line: usize, message: impl Into<String>) -> VttError {
    VttError::Malformed {
        line,
        message: message.into(),
    }
}

/// Parses `[HH:]MM:SS.mmm` into seconds.
fn parse_timestamp(s: &str) -> Option<f64> {
    let (hms, millis) = s.split_once('.')?;
    if millis.len() != 3 || !millis.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let parts: Vec<&str> = hms.split(':').collect();
    let (h, m, sec) = match parts.as_slice() {
        [h, m, s] => (*h, *m, *s),
        [m, s] => ("0", *m, *s),
        _ => return None,
    };
    let digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
    if !digits(h) || m.len() != 2 || sec.len() != 2 || !digits(m) || !digits(sec) {
        return None;
    }
    let (h, m, sec): (u64, u64, u64) = (h.parse().ok()?, m.parse().ok()?, sec.parse().ok()?);
    if m >= 60 || sec >= 60 {
        return None;
    }
    let ms: u64 = millis.parse().ok()?;
    let total_ms = ((h * 60 + m) * 60 + sec) * 1000 + ms;
    Some(total_ms as f64 / 1000.0)
}

fn parse_timing(line: &str, line_no: usize) -> Result<(f64, f64), VttError> {
    let (left, right) = line
        .split_once("-->")
        .ok_or_else(|| malformed(line_no, "expected `-->` timing line"))?;
    let start = parse_timestamp(left.trim())
        .ok_or_else(|| malformed(line_no, format!("bad start timestamp `{}`", left.trim())))?;
    // Anything after the end timestamp is cue settings, which we ignore.
    let end_tok = right.split_whitespace().next().unwrap_or("");
    let end = parse_timestamp(end_tok)
        .ok_or_else(|| malformed(line_no, format!("bad end timestamp `{end_tok}`")))?;
    Ok((start, end))
}

/// Sorts cues, drops zero-length ones and truncates overlaps.
pub fn repair(mut cues: Vec<Cue>) -> Vec<Cue> {
    cues.sort_by(|a, b| {
        a.start
            .total_cmp(&b.start)
            .then_with(|| a.end.total_cmp(&b.end))
    });
    let mut out: Vec<Cue> = Vec::with_capacity(cues.len());
    for cue in cues {
        if let Some(last) = out.last_mut() {
            if last.end > cue.start {
                last.end = cue.start;
                if last.end <= last.start {
                    out.pop();
                }
            }
        }
        if cue.end > cue.start {
            out.push(cue);
        }
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<Cue>, VttError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let lines: Vec<&str> = text.lines().collect();
    match lines.first() {
        Some(first)
            if *first == "WEBVTT"
                || first.starts_with("WEBVTT ")
                || first.starts_with("WEBVTT\t") => {}
        _ => return Err(VttError::MissingHeader),
    }

    // Skip the rest of the header block.
    let mut i = 1;
    while i < lines.len() && !lines[i].trim().is_empty() {
        i += 1;
    }

    let mut cues = Vec::new();
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let block_start = i;
        while i < lines.len() && !lines[i].trim().is_empty() {
            i += 1;
        }
        let block = &lines[block_start..i];
        let first = block[0].trim_start();
        if first.starts_with("NOTE") || first == "STYLE" || first == "REGION" {
            continue;
        }
        let timing_at = if block[0].contains("-->") {
            0
        } else if block.len() > 1 && block[1].contains("-->") {
            1 // cue identifier line
        } else {
            return Err(malformed(block_start + 1, "cue block without timing line"));
        };
        let (start, end) = parse_timing(block[timing_at], block_start + timing_at + 1)?;
        let text = block[timing_at + 1..].join("\n");
        cues.push(Cue { start, end, text });
    }
    Ok(repair(cues))
}

pub fn format_timestamp(seconds: f64) -> String {
    let total_ms = (seconds.max(0.0) * 1000.0).round() as u64;
    let ms = total_ms % 1000;
    let s = (total_ms / 1000) % 60;
    let m = (total_ms / 60_000) % 60;
    let h = total_ms / 3_600_000;
    format!("{h:02}:{m:02}:{s:02}.{ms:03}")
}

pub fn render(cues: &[Cue]) -> String {
    let mut out = String::from("WEBVTT\n");
    for cue in cues {
        out.push('\n');
        out.push_str(&format_timestamp(cue.start));
        out.push_str(" --> ");
        out.push_str(&format_timestamp(cue.end));
        out.push('\n');
        // Blank lines would terminate the block.
        for line in cue.text.lines().filter(|l| !l.trim().is_empty()) {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}
