//! Seeded generator for simulator worlds and the matching text dumps.
//!
//! Videos cycle through a fixed set of subtitle scenarios so every branch of
//! subtitle resolution shows up in small worlds. Some titles use words that
//! never appear in any dump; those videos are reachable only through channel
//! expansion, and channels whose every title is hidden stay undiscovered.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sim::{WorldCue, WorldTrack, WorldVideo};
use super::WorldSpec;
use crate::model::SubtitleKind;

/// Number of subtitle scenarios; video `i` gets scenario `i % SCENARIOS`.
pub const SCENARIOS: usize = 12;

struct Lang {
    tag: &'static str,
    weight: u32,
    syllables: Vec<String>,
    /// Syllables per word.
    len: (usize, usize),
}

fn pairs(cons: &str, vowels: &[&str]) -> Vec<String> {
    cons.chars()
        .flat_map(|c| vowels.iter().map(move |v| format!("{c}{v}")))
        .collect()
}

fn singles(chars: &str) -> Vec<String> {
    chars.chars().map(String::from).collect()
}

fn languages() -> Vec<Lang> {
    vec![
        Lang { tag: "en", weight: 30, syllables: pairs("bcdfghklmnprstvw", &["a", "e", "i", "o", "u"]), len: (2, 3) },
        Lang { tag: "es", weight: 12, syllables: pairs("bcdlmnñprst", &["a", "e", "i", "o", "u", "á", "é"]), len: (2, 3) },
        Lang { tag: "de", weight: 10, syllables: pairs("bdfghklmnrstwz", &["a", "e", "i", "o", "u", "ä", "ö", "ü"]), len: (2, 3) },
        Lang { tag: "fr", weight: 10, syllables: pairs("bcdlmnprstv", &["a", "e", "i", "o", "u", "é", "è"]), len: (2, 3) },
        Lang { tag: "ru", weight: 8, syllables: pairs("бвгдзклмнпрстф", &["а", "е", "и", "о", "у", "ы", "я"]), len: (2, 3) },
        Lang { tag: "ja", weight: 6, syllables: singles("かきくけこさしすせそたちつてとなにぬねのまみむめもカキクケコ"), len: (2, 4) },
        Lang { tag: "zh", weight: 6, syllables: singles("的一是不了人我在有他这中大来上国个到说们为子和你地出道也时年"), len: (2, 3) },
        Lang { tag: "ko", weight: 5, syllables: singles("가나다라마바사아자차카타파하고노도로모보소오조"), len: (2, 3) },
        Lang { tag: "el", weight: 4, syllables: pairs("βγδκλμνπρτφχ", &["α", "ε", "η", "ι", "ο", "υ", "ω"]), len: (2, 3) },
        Lang { tag: "hi", weight: 4, syllables: pairs("कखगचजतदनपबमयरलवस", &["", "ा", "ि", "ी", "ु", "े", "ो"]), len: (2, 3) },
        Lang { tag: "ar", weight: 3, syllables: singles("ابتثجحخدذرزسشصضطظعغفقكلمنهوي"), len: (3, 5) },
        Lang { tag: "ml", weight: 2, syllables: pairs("കഖഗചജടതദനപബമയരലവസ", &["", "ാ", "ി", "ീ", "ു", "േ"]), len: (2, 3) },
        Lang { tag: "is", weight: 2, syllables: pairs("bdfghklmnrstvþð", &["a", "e", "i", "o", "u", "á", "ó", "æ", "ö"]), len: (2, 3) },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub videos: usize,
    pub seed: u64,
    pub page_size: usize,
}

impl GenConfig {
    pub fn new(videos: usize, seed: u64) -> Self {
        Self {
            videos,
            seed,
            page_size: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedWorld {
    pub world: WorldSpec,
    /// `<lang>.txt` contents, one document per line. Each dump carries one
    /// line of invalid UTF-8.
    pub dumps: BTreeMap<String, Vec<u8>>,
}

struct Gen {
    rng: ChaCha8Rng,
    langs: Vec<Lang>,
    /// Per-language pool of words used in titles and speech.
    pools: Vec<Vec<String>>,
}

const ID_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

impl Gen {
    fn new(seed: u64, pool_size: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let langs = languages();
        let pools = langs
            .iter()
            .map(|l| {
                let mut set = BTreeSet::new();
                let mut attempts = 0;
                while set.len() < pool_size && attempts < pool_size * 50 {
                    attempts += 1;
                    let n = rng.random_range(l.len.0..=l.len.1);
                    let w: String = (0..n)
                        .map(|_| l.syllables.choose(&mut rng).unwrap().as_str())
                        .collect();
                    set.insert(w);
                }
                let mut pool: Vec<String> = set.into_iter().collect();
                pool.shuffle(&mut rng);
                pool
            })
            .collect();
        Self { rng, langs, pools }
    }

    fn id(&mut self, len: usize) -> String {
        (0..len)
            .map(|_| *ID_ALPHABET.choose(&mut self.rng).unwrap() as char)
            .collect()
    }

    fn pick_lang(&mut self) -> usize {
        let total: u32 = self.langs.iter().map(|l| l.weight).sum();
        let mut x = self.rng.random_range(0..total);
        for (i, l) in self.langs.iter().enumerate() {
            if x < l.weight {
                return i;
            }
            x -= l.weight;
        }
        unreachable!()
    }

    fn other_lang(&mut self, lang: usize) -> usize {
        let k = self.rng.random_range(1..self.langs.len());
        (lang + k) % self.langs.len()
    }

    fn word(&mut self, lang: usize) -> String {
        self.pools[lang].choose(&mut self.rng).unwrap().clone()
    }

    fn sentence(&mut self, lang: usize) -> String {
        let n = self.rng.random_range(2..=5);
        (0..n).map(|_| self.word(lang)).collect::<Vec<_>>().join(" ")
    }

    fn ms(&mut self, lo: f64, hi: f64) -> u64 {
        (self.rng.random_range(lo..hi) * 1000.0).round() as u64
    }

    /// Cue timeline for `n` utterances. Times are whole milliseconds so they
    /// survive a WebVTT round trip exactly.
    fn timeline(&mut self, spoken: &[String]) -> Vec<(f64, f64)> {
        let mut t = self.ms(0.1, 1.0);
        spoken
            .iter()
            .map(|s| {
                let chars = s.chars().count() as f64;
                let len = (chars * 100.0).round() as u64 + self.ms(0.2, 0.8);
                let span = (t as f64 / 1000.0, (t + len) as f64 / 1000.0);
                t += len + self.ms(0.1, 0.9);
                span
            })
            .collect()
    }

    /// A track whose subtitle text matches what is said, styled by kind.
    fn track(&mut self, lang: usize, kind: SubtitleKind, n_cues: usize) -> WorldTrack {
        let spoken: Vec<String> = (0..n_cues).map(|_| self.sentence(lang)).collect();
        let times = self.timeline(&spoken);
        let cues = spoken
            .into_iter()
            .zip(times)
            .map(|(s, (start, end))| match kind {
                SubtitleKind::Manual => WorldCue {
                    start,
                    end,
                    text: manual_style(&s),
                    spoken_text: Some(s),
                },
                SubtitleKind::Automatic => WorldCue {
                    start,
                    end,
                    text: s,
                    spoken_text: None,
                },
            })
            .collect();
        WorldTrack {
            language: self.langs[lang].tag.to_string(),
            kind,
            malformed: false,
            cues,
        }
    }

    fn n_cues(&mut self) -> usize {
        self.rng.random_range(2..=5)
    }
}

/// Capitalized with a trailing period, as people type subtitles.
fn manual_style(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => format!("{}{}.", first.to_uppercase(), chars.as_str()),
        None => String::new(),
    }
}

fn end_of(tracks: &[WorldTrack]) -> f64 {
    tracks
        .iter()
        .flat_map(|t| t.cues.last())
        .map(|c| c.end)
        .fold(0.0, f64::max)
}

const SAMPLE_RATES: [u32; 5] = [48_000, 44_100, 16_000, 8_000, 24_000];

pub fn generate(config: GenConfig) -> GeneratedWorld {
    let pool_size = (config.videos / 2).max(12);
    let mut g = Gen::new(config.seed, pool_size);
    let n_channels = (config.videos / 5).max(4);
    let channel_ids: Vec<String> = (0..n_channels).map(|_| format!("UC{}", g.id(22))).collect();
    // Dump words, per language: everything that must be findable.
    let mut findable: Vec<BTreeSet<String>> = vec![BTreeSet::new(); g.langs.len()];
    let mut videos = Vec::with_capacity(config.videos);
    let mut used_ids = BTreeSet::new();

    for i in 0..config.videos {
        let lang = g.pick_lang();
        let channel = i % n_channels;
        let mut id = g.id(11);
        while !used_ids.insert(id.clone()) {
            id = g.id(11);
        }
        let hidden = channel % 6 == 5 || i % 5 == 4;
        let title_keywords: Vec<String> = if hidden {
            vec![format!("qzhidden{i}")]
        } else {
            let n = g.rng.random_range(1..=3);
            let words: Vec<String> = (0..n).map(|_| g.word(lang)).collect();
            findable[lang].extend(words.iter().cloned());
            words
        };

        let mut acoustic_noise = 0.0;
        let mut license_cc = true;
        let n = g.n_cues();
        let tracks = match i % SCENARIOS {
            0 => vec![g.track(lang, SubtitleKind::Manual, n)],
            1 => vec![g.track(lang, SubtitleKind::Automatic, n)],
            2 => {
                let manual = g.track(lang, SubtitleKind::Manual, n);
                let mut auto = manual.clone();
                auto.kind = SubtitleKind::Automatic;
                for c in &mut auto.cues {
                    c.text = c.spoken().to_string();
                    c.spoken_text = None;
                }
                vec![manual, auto]
            }
            3 => vec![],
            4 => {
                let other = g.other_lang(lang);
                vec![
                    g.track(lang, SubtitleKind::Manual, n),
                    g.track(other, SubtitleKind::Manual, n),
                ]
            }
            5 => {
                // Music intro: subtitle text with nothing spoken.
                let mut t = g.track(lang, SubtitleKind::Manual, n);
                let shift = |x: f64| ((x * 1000.0).round() + 2000.0) / 1000.0;
                for c in &mut t.cues {
                    c.start = shift(c.start);
                    c.end = shift(c.end);
                }
                t.cues.insert(
                    0,
                    WorldCue {
                        start: 0.2,
                        end: 1.8,
                        text: "[music]".into(),
                        spoken_text: Some(String::new()),
                    },
                );
                vec![t]
            }
            6 => {
                acoustic_noise = 0.9;
                vec![g.track(lang, SubtitleKind::Automatic, n)]
            }
            7 => vec![
                g.track(lang, SubtitleKind::Automatic, n),
                g.track(lang, SubtitleKind::Automatic, n),
            ],
            8 => {
                let other = g.other_lang(lang);
                vec![
                    g.track(lang, SubtitleKind::Manual, n),
                    g.track(other, SubtitleKind::Automatic, n),
                ]
            }
            9 => {
                let mut t = g.track(lang, SubtitleKind::Manual, n);
                t.malformed = true;
                vec![t]
            }
            10 => {
                // Recognizer output that drops a word now and then.
                let mut t = g.track(lang, SubtitleKind::Automatic, n);
                for c in &mut t.cues {
                    let words: Vec<&str> = c.text.split(' ').collect();
                    if words.len() > 2 && g.rng.random_bool(0.3) {
                        let spoken = c.text.clone();
                        let skip = g.rng.random_range(0..words.len());
                        c.text = words
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| *k != skip)
                            .map(|(_, w)| *w)
                            .collect::<Vec<_>>()
                            .join(" ");
                        c.spoken_text = Some(spoken);
                    }
                }
                vec![t]
            }
            _ => {
                license_cc = false;
                vec![g.track(lang, SubtitleKind::Manual, n)]
            }
        };
        // Tracks have independent timelines; the video covers the longest.
        let tail = g.ms(0.5, 2.0) as f64 / 1000.0;
        let duration_s = if tracks.is_empty() {
            g.ms(3.0, 12.0) as f64 / 1000.0
        } else {
            ((end_of(&tracks) + tail) * 1000.0).round() / 1000.0
        };
        let media_sample_rate = SAMPLE_RATES[i % SAMPLE_RATES.len()];
        let media_channels = if i % 3 == 0 { 1 } else { 2 };
        videos.push(WorldVideo {
            id,
            channel_id: channel_ids[channel].clone(),
            title_keywords,
            license_cc,
            duration_s,
            audio_seed: g.rng.random(),
            media_sample_rate,
            media_channels,
            acoustic_noise,
            subtitle_tracks: tracks,
        });
    }

    let dumps = (0..g.langs.len())
        .map(|l| {
            let tag = g.langs[l].tag.to_string();
            let body = dump_text(&mut g, l, &findable[l]);
            (tag, body)
        })
        .collect();

    GeneratedWorld {
        world: WorldSpec {
            page_size: config.page_size,
            extra_channels: Vec::new(),
            videos,
        },
        dumps,
    }
}

/// Documents mixing the findable title words with filler words, numbers,
/// one-letter tokens, punctuation and capitalization.
fn dump_text(g: &mut Gen, lang: usize, findable: &BTreeSet<String>) -> Vec<u8> {
    let mut words: Vec<String> = findable.iter().cloned().collect();
    words.shuffle(&mut g.rng);
    let mut out = Vec::new();
    let emit = |line: &str, out: &mut Vec<u8>| {
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    };
    for chunk in words.chunks(6) {
        let mut doc: Vec<String> = chunk.to_vec();
        doc.push(g.word(lang));
        doc.push(format!("{}", g.rng.random_range(0..3000)));
        doc.push("x".into());
        doc.shuffle(&mut g.rng);
        let mut line = manual_style(&doc.join(" ")).replacen(' ', ", ", 1);
        line.push_str(" (1999)");
        emit(&line, &mut out);
    }
    emit(&format!("{} {}", g.word(lang), g.word(lang)), &mut out);
    out.extend_from_slice(b"\xff\xfe broken \xc3\x28 line\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::platform::SimPlatform;

    #[test]
    fn generated_worlds_validate_and_repeat() {
        for n in [12, 60] {
            let a = generate(GenConfig::new(n, 5));
            let b = generate(GenConfig::new(n, 5));
            assert_eq!(a.world, b.world);
            assert_eq!(a.dumps, b.dumps);
            assert_eq!(a.world.videos.len(), n);
            SimPlatform::new(a.world).unwrap();
        }
    }

    #[test]
    fn every_scenario_appears_in_twelve() {
        let w = generate(GenConfig::new(12, 1)).world;
        assert!(w.videos.iter().any(|v| !v.license_cc));
        assert!(w.videos.iter().any(|v| v.subtitle_tracks.is_empty()));
        assert!(w.videos.iter().any(|v| v.subtitle_tracks.iter().any(|t| t.malformed)));
        assert!(w.videos.iter().any(|v| v.acoustic_noise > 0.0));
    }

    #[test]
    fn title_words_appear_in_dumps() {
        let gw = generate(GenConfig::new(60, 3));
        let all: String = gw
            .dumps
            .values()
            .map(|d| String::from_utf8_lossy(d).to_lowercase())
            .collect();
        for v in &gw.world.videos {
            for k in &v.title_keywords {
                assert_eq!(all.contains(k.as_str()), !k.starts_with("qzhidden"), "{k}");
            }
        }
    }
}
