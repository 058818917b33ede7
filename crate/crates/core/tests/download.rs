use proptest::prelude::*;
use speechcrawl::download::audio::{normalize_audio, output_len};
use speechcrawl::download::resolve::{resolve_subtitles, ResolveMode};
use speechcrawl::download::webvtt;
use speechcrawl::model::{Cue, SubtitleDescriptor, SubtitleKind};
use speechcrawl::platform::RawMedia;

fn descriptor() -> impl Strategy<Value = SubtitleDescriptor> {
    (prop::sample::select(vec!["en", "de", "ja", "pt-BR"]), any::<bool>()).prop_map(|(l, manual)| {
        if manual {
            SubtitleDescriptor::manual(l)
        } else {
            SubtitleDescriptor::automatic(l)
        }
    })
}

proptest! {
    #[test]
    fn classification_ignores_order(
        ds in prop::collection::vec(descriptor(), 0..7),
        perm in any::<prop::sample::Index>(),
        strict in any::<bool>(),
    ) {
        let mode = if strict { ResolveMode::Strict } else { ResolveMode::Lenient };
        let mut shuffled = ds.clone();
        let k = perm.index(shuffled.len().max(1));
        shuffled.rotate_left(k);
        shuffled.reverse();
        let a = resolve_subtitles(&ds, mode);
        prop_assert_eq!(&a, &resolve_subtitles(&shuffled, mode));
        if let Some(track) = a.chosen_track() {
            prop_assert!(ds.contains(&track));
        }
        if mode == ResolveMode::Strict && a.language().is_some() {
            prop_assert_eq!(ds.len(), 1);
        }
    }

    #[test]
    fn normalizing_twice_only_requantizes(
        rate in prop::sample::select(vec![8_000u32, 11_025, 16_000, 22_050, 24_000, 32_000, 44_100, 48_000, 96_000]),
        channels in 1u16..4,
        frames in 1usize..3000,
        seed in any::<u64>(),
    ) {
        let mut x = seed | 1;
        let samples: Vec<i16> = (0..frames * channels as usize)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                (x >> 48) as i16
            })
            .collect();
        let raw = RawMedia { sample_rate: rate, channels, samples };
        let once = normalize_audio(&raw).unwrap();
        prop_assert_eq!(once.samples.len(), output_len(frames, rate));
        let twice = normalize_audio(&once.to_raw()).unwrap();
        prop_assert_eq!(once.samples.len(), twice.samples.len());
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            prop_assert!((*a as i32 - *b as i32).abs() <= 1);
        }
    }

    #[test]
    fn rendered_cues_parse_back(
        raw in prop::collection::vec((0u32..600_000, 1u32..20_000, "[a-z ]{1,20}"), 0..12)
    ) {
        let mut cues: Vec<Cue> = raw
            .into_iter()
            .map(|(start_ms, len_ms, text)| Cue {
                start: start_ms as f64 / 1000.0,
                end: (start_ms + len_ms) as f64 / 1000.0,
                text: text.trim().to_string(),
            })
            .filter(|c| !c.text.is_empty())
            .collect();
        cues.sort_by(|a, b| a.start.total_cmp(&b.start));
        let parsed = webvtt::parse(&webvtt::render(&cues)).unwrap();
        let mut prev_end = 0.0;
        for c in &parsed {
            prop_assert!(c.end > c.start);
            prop_assert!(c.start >= prev_end);
            prev_end = c.end;
        }
        prop_assert!(parsed.len() <= cues.len());
    }
}

#[test]
fn kind_round_trips_through_text() {
    for kind in [SubtitleKind::Manual, SubtitleKind::Automatic] {
        assert_eq!(kind.as_str().parse::<SubtitleKind>().unwrap(), kind);
    }
}
