//! Acceptance criteria, one check per criterion. Runs without the libtest
//! harness so every criterion reports a line even when an earlier one fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use speechcrawl::coordinator::{
    Coordinator, CoordinatorClient, Event, EventLog, LeaseConfig, MemoryStore, ResourceKind,
};
use speechcrawl::crawl::DiscoveryConfig;
use speechcrawl::curation::ctc::ctc_log_loss;
use speechcrawl::curation::stats::{duration_stats, stats_table, text_length_stats};
use speechcrawl::curation::{
    filter_by_threshold, sample_splits, score_corpus, threshold_sweep, CtcScorer, UtterancePair,
};
use speechcrawl::download::audio::{normalize_audio, output_len, TARGET_SAMPLE_RATE};
use speechcrawl::download::resolve::{resolve_subtitles, Classification, ResolveMode};
use speechcrawl::download::Subset;
use speechcrawl::model::{SubtitleDescriptor, SubtitleKind};
use speechcrawl::pipeline::{self, CurateConfig, PipelineConfig};
use speechcrawl::platform::acoustic::{normalize_transcript, Posteriors, SimAcousticModel};
use speechcrawl::platform::{RawMedia, SimPlatform};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(n: usize) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("fixtures/world_{n}"))
}

// 1. Coordinator safety under crashes.

fn coordinator_safety() -> Check {
    const RESOURCES: usize = 1000;
    const WORKERS: usize = 8;
    let started = Instant::now();
    let log = EventLog::default();
    let lease = LeaseConfig::new(Duration::from_millis(150)).map_err(|e| e.to_string())?;
    let coord = Arc::new(
        Coordinator::open(Box::new(MemoryStore::with_log(log.clone())), lease)
            .map_err(|e| e.to_string())?,
    );
    for i in 0..RESOURCES {
        Coordinator::add_resource(&coord, ResourceKind::Video, &format!("video-{i:04}"))
            .map_err(|e| e.to_string())?;
    }

    let crashes: usize = std::thread::scope(|s| {
        let handles: Vec<_> = (0..WORKERS)
            .map(|w| {
                let coord = coord.clone();
                s.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(w as u64);
                    let mut generation = 0;
                    let mut crashes = 0;
                    while Coordinator::stats(&coord).get(ResourceKind::Video).done < RESOURCES as u64 {
                        let worker = format!("w{w}.{generation}");
                        let Some(r) = Coordinator::acquire_next(&coord, ResourceKind::Video, &worker)
                            .expect("acquire")
                        else {
                            std::thread::sleep(Duration::from_millis(5));
                            continue;
                        };
                        std::thread::sleep(Duration::from_micros(rng.random_range(0..1500)));
                        if rng.random_bool(0.1) {
                            // Crash: abandon the lease and restart under a new identity.
                            crashes += 1;
                            generation += 1;
                            continue;
                        }
                        Coordinator::complete(&coord, &r.id, &worker, Some("ok".into()))
                            .expect("holder completes its own lease");
                    }
                    crashes
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).sum()
    });
    let elapsed = started.elapsed();

    // Replay the audit log: at most one open lease per resource at any time.
    let events = log.events();
    let mut open: HashMap<String, (String, u64)> = HashMap::new();
    let mut done: BTreeSet<String> = BTreeSet::new();
    let mut expired = 0;
    for (i, e) in events.iter().enumerate() {
        ensure(e.seq == i as u64 + 1, || format!("event sequence gap at {i}"))?;
        match &e.event {
            Event::Added { .. } => {}
            Event::Acquired {
                id,
                worker_id,
                expires_at_us,
            } => {
                ensure(!done.contains(&id.0), || format!("{id} acquired after completion"))?;
                if let Some((holder, _)) = open.get(&id.0) {
                    return Err(format!("{id} leased to {worker_id} while held by {holder}"));
                }
                open.insert(id.0.clone(), (worker_id.clone(), *expires_at_us));
            }
            Event::Expired { id, worker_id } => {
                let (holder, until) = open
                    .remove(&id.0)
                    .ok_or_else(|| format!("{id} expired without a lease"))?;
                ensure(holder == *worker_id, || format!("{id} expiry names the wrong holder"))?;
                ensure(e.at_us > until, || format!("{id} reclaimed before its lease ran out"))?;
                expired += 1;
            }
            Event::Completed { id, worker_id, .. } => {
                let (holder, _) = open
                    .remove(&id.0)
                    .ok_or_else(|| format!("{id} completed without a lease"))?;
                ensure(holder == *worker_id, || format!("{id} completed by a non-holder"))?;
                ensure(done.insert(id.0.clone()), || format!("{id} completed twice"))?;
            }
        }
    }
    ensure(done.len() == RESOURCES, || format!("{} of {RESOURCES} resources done", done.len()))?;
    ensure(open.is_empty(), || format!("{} leases left open", open.len()))?;
    ensure(crashes > 0 && expired == crashes, || {
        format!("{crashes} crashes but {expired} expiries")
    })?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{RESOURCES} resources, {WORKERS} workers, {crashes} crashes retried via expiry, {} events audited, {:.2}s",
        events.len(),
        elapsed.as_secs_f64()
    ))
}

// 2. Discovery closure against a reachability oracle over raw world JSON.

fn reachability_oracle(world: &Value, keywords: &[String], max_pages: usize) -> BTreeSet<String> {
    let page_size = world["page_size"].as_u64().unwrap() as usize;
    let videos = world["videos"].as_array().unwrap();
    let cc = |v: &Value| v["license_cc"].as_bool().unwrap();
    let has_subs = |v: &Value| v["subtitle_tracks"].as_array().is_some_and(|t| !t.is_empty());
    let mut found = BTreeSet::new();
    for kw in keywords {
        let mut hits: Vec<(usize, &str)> = videos
            .iter()
            .filter(|v| cc(v) && has_subs(v))
            .filter_map(|v| {
                let n = v["title_keywords"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .filter(|k| k.as_str() == Some(kw.as_str()))
                    .count();
                (n > 0).then(|| (n, v["id"].as_str().unwrap()))
            })
            .collect();
        hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
        found.extend(hits.iter().take(max_pages * page_size).map(|h| h.1.to_string()));
    }
    loop {
        let channels: BTreeSet<&str> = videos
            .iter()
            .filter(|v| found.contains(v["id"].as_str().unwrap()))
            .map(|v| v["channel_id"].as_str().unwrap())
            .collect();
        let before = found.len();
        for v in videos {
            if cc(v) && channels.contains(v["channel_id"].as_str().unwrap()) {
                found.insert(v["id"].as_str().unwrap().to_string());
            }
        }
        if found.len() == before {
            return found;
        }
    }
}

fn discovery_closure() -> Check {
    let mut lines = Vec::new();
    for n in [12, 60, 500] {
        let dir = fixture(n);
        let text = std::fs::read_to_string(dir.join("world.json")).map_err(|e| e.to_string())?;
        let raw: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        let sim = SimPlatform::load(dir.join("world.json")).map_err(|e| e.to_string())?;

        let coord = Arc::new(Coordinator::in_memory());
        pipeline::harvest_and_feed(&dir.join("dumps"), coord.as_ref(), None, None)
            .map_err(|e| e.to_string())?;
        let keywords = Coordinator::payloads(&coord, ResourceKind::Keyword);
        let cfg = DiscoveryConfig::new("disc");
        let client: Arc<dyn CoordinatorClient> = coord.clone();
        pipeline::run_discovery(client, Arc::new(sim), 4, &cfg).map_err(|e| e.to_string())?;

        let discovered: BTreeSet<String> =
            Coordinator::payloads(&coord, ResourceKind::Video).into_iter().collect();
        let expected = reachability_oracle(&raw, &keywords, cfg.max_pages);
        if discovered != expected {
            let extra: Vec<_> = discovered.difference(&expected).collect();
            let missing: Vec<_> = expected.difference(&discovered).collect();
            return Err(format!("world_{n}: extra {extra:?}, missing {missing:?}"));
        }
        lines.push(format!("world_{n}: {} videos", discovered.len()));
    }
    Ok(lines.join(", "))
}

// 3. Subtitle classification against a rule table.

fn rule_table(ds: &[SubtitleDescriptor], mode: ResolveMode) -> Classification {
    let langs: BTreeSet<&str> = ds.iter().map(|d| d.language.as_str()).collect();
    let manual = ds.iter().filter(|d| d.kind == SubtitleKind::Manual).count();
    let auto = ds.len() - manual;
    if langs.len() != 1 {
        return Classification::Unlabeled;
    }
    let lang = langs.into_iter().next().unwrap().to_string();
    match (manual, auto, mode) {
        (1, 0, _) => Classification::ManualLabeled(lang),
        (1, _, ResolveMode::Lenient) => Classification::ManualLabeled(lang),
        (0, 1, _) => Classification::AutomaticLabeled(lang),
        _ => Classification::Unlabeled,
    }
}

fn classification_oracle() -> Check {
    let alphabet = [
        SubtitleDescriptor::manual("en"),
        SubtitleDescriptor::automatic("en"),
        SubtitleDescriptor::manual("de"),
        SubtitleDescriptor::automatic("de"),
    ];
    // Every ordered sequence of length <= 3, which covers every multiset in
    // every order.
    let mut seqs: Vec<Vec<SubtitleDescriptor>> = vec![vec![]];
    let mut frontier = seqs.clone();
    for _ in 0..3 {
        frontier = frontier
            .iter()
            .flat_map(|s| {
                alphabet.iter().map(move |d| {
                    let mut t = s.clone();
                    t.push(d.clone());
                    t
                })
            })
            .collect();
        seqs.extend(frontier.iter().cloned());
    }
    for mode in [ResolveMode::Lenient, ResolveMode::Strict] {
        for s in &seqs {
            let got = resolve_subtitles(s, mode);
            let want = rule_table(s, mode);
            ensure(got == want, || format!("{mode:?} {s:?}: got {got:?}, want {want:?}"))?;
        }
    }
    Ok(format!("{} sequences x 2 modes", seqs.len()))
}

// 4. CTC against exhaustive path enumeration.

fn collapse(path: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &s in path {
        if Some(s) != prev && s != 0 {
            out.push(s);
        }
        prev = Some(s);
    }
    out
}

fn brute_force_loss(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let (t_len, v) = (rows.len(), rows[0].len());
    let mut total = 0.0;
    let mut path = vec![0usize; t_len];
    for code in 0..v.pow(t_len as u32) {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = c % v;
            c /= v;
        }
        if collapse(&path) == labels {
            total += path.iter().enumerate().map(|(t, &s)| rows[t][s]).product::<f64>();
        }
    }
    -total.ln() / labels.len() as f64
}

fn ctc_correctness() -> Check {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut infeasible = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t_len = rng.random_range(1..=6);
        let v = rng.random_range(2..=4);
        let n_labels = rng.random_range(1..=3);
        let labels: Vec<usize> = (0..n_labels).map(|_| rng.random_range(1..v)).collect();
        let rows: Vec<Vec<f64>> = (0..t_len)
            .map(|_| {
                let raw: Vec<f64> = (0..v).map(|_| rng.random_range(0.01..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|x| x / sum).collect()
            })
            .collect();
        let want = brute_force_loss(&rows, &labels);
        let post = Posteriors::from_rows(rows).map_err(|e| format!("seed {seed}: {e}"))?;
        let got = ctc_log_loss(&post, &labels).map_err(|e| format!("seed {seed}: {e}"))?;
        if want.is_infinite() {
            infeasible += 1;
            ensure(got.loss == f64::INFINITY && got.infeasible, || {
                format!("seed {seed}: expected infeasible, got {got:?}")
            })?;
        } else {
            let err = (got.loss - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || format!("seed {seed}: {} vs {want}", got.loss))?;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "1000 instances ({infeasible} infeasible), max abs error {worst:.1e}, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

// 5. Threshold semantics with the reference scorer.

/// Cues of single-track videos with no background noise whose subtitle text
/// is what is spoken: the synthetic utterances whose only degradation is the
/// scorer's corruption.
fn clean_utterances(sim: &SimPlatform) -> Vec<UtterancePair> {
    let mut out = Vec::new();
    for v in &sim.world().videos {
        if v.acoustic_noise != 0.0 || v.subtitle_tracks.len() != 1 {
            continue;
        }
        let track = &v.subtitle_tracks[0];
        if track.malformed {
            continue;
        }
        let subset = match track.kind {
            SubtitleKind::Manual => Subset::Manual,
            SubtitleKind::Automatic => Subset::Automatic,
        };
        for (i, c) in track.cues.iter().enumerate() {
            let text = normalize_transcript(&c.text);
            if text.is_empty() || text != normalize_transcript(c.spoken()) {
                continue;
            }
            out.push(UtterancePair {
                video_id: v.id.clone(),
                cue_index: i,
                language: track.language.clone(),
                subset,
                duration: c.end - c.start,
                transcript: c.text.clone(),
                score: None,
            });
        }
    }
    out
}

fn threshold_semantics() -> Check {
    let sim = Arc::new(SimPlatform::load(fixture(500).join("world.json")).map_err(|e| e.to_string())?);
    let pairs = clean_utterances(&sim);
    ensure(pairs.len() >= 100, || format!("only {} clean utterances", pairs.len()))?;
    let n = pairs.len() as f64;

    let clean = score_corpus(&pairs, &CtcScorer { model: SimAcousticModel::new(sim.clone(), 0.0) });
    let kept_clean = filter_by_threshold(&clean, 2.0).len() as f64 / n;
    ensure(kept_clean >= 0.99, || format!("corruption 0: only {:.2}% kept", 100.0 * kept_clean))?;

    let noisy = score_corpus(&pairs, &CtcScorer { model: SimAcousticModel::new(sim, 0.9) });
    let excluded = 1.0 - filter_by_threshold(&noisy, 2.0).len() as f64 / n;
    ensure(excluded >= 0.90, || format!("corruption 0.9: only {:.2}% excluded", 100.0 * excluded))?;

    let thresholds: Vec<f64> = (1..=16).map(f64::from).collect();
    let mut monotone_checked = 0;
    for scored in [&clean, &noisy] {
        let sweep = threshold_sweep(scored, &thresholds, 16.0);
        ensure(sweep.thresholds == thresholds, || "sweep thresholds differ".into())?;
        ensure(sweep.kept_counts.windows(2).all(|w| w[0] <= w[1]), || {
            format!("sweep not monotone: {:?}", sweep.kept_counts)
        })?;
        let scored_pairs = scored.iter().filter(|p| p.score.is_some()).count();
        ensure(sweep.kept_counts[15] == scored_pairs, || {
            format!("cap 16 keeps {} of {scored_pairs} at threshold 16", sweep.kept_counts[15])
        })?;
        monotone_checked += 1;
    }
    Ok(format!(
        "{} utterances: {:.1}% kept at corruption 0, {:.1}% excluded at 0.9, {monotone_checked} sweeps monotone",
        pairs.len(),
        100.0 * kept_clean,
        100.0 * excluded
    ))
}

// 6. Statistics against a two-pass oracle.

fn two_pass(xs: &[f64]) -> [f64; 4] {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    [mean, var.sqrt(), min, max]
}

fn statistics_fidelity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let durations: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.05..30.0)).collect();
    let alphabet: Vec<char> = "abcxyzéøжд東京한अ ".chars().collect();
    let texts: Vec<String> = (0..10_000)
        .map(|_| {
            let len = rng.random_range(0..120);
            (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        })
        .collect();
    let lengths: Vec<f64> = texts.iter().map(|t| t.chars().count() as f64).collect();

    let d = duration_stats(&durations).ok_or("no duration stats")?;
    let l = text_length_stats(&texts).ok_or("no length stats")?;
    for (name, got, want) in [
        ("duration", d, two_pass(&durations)),
        ("text length", l, two_pass(&lengths)),
    ] {
        let got_v = [got.mean, got.std, got.min, got.max];
        for (k, (g, w)) in got_v.iter().zip(want).enumerate() {
            ensure((g - w).abs() <= 1e-9, || format!("{name} stat {k}: {g} vs {w}"))?;
        }
        ensure(got.count == 10_000, || format!("{name} count {}", got.count))?;
    }

    let table = stats_table(&[("manual", Some(d)), ("automatic", Some(l))]);
    let rows: Vec<&str> = table.rows.iter().map(|r| r[0].as_str()).collect();
    ensure(rows == ["Mean", "Std", "Min", "Max"], || format!("rows {rows:?}"))?;
    ensure(table.header == ["statistic", "manual", "automatic"], || {
        format!("header {:?}", table.header)
    })?;
    for (i, want) in two_pass(&durations).iter().enumerate() {
        let cell: f64 = table.rows[i][1].parse().map_err(|_| "unparsable cell".to_string())?;
        ensure((cell - want).abs() <= 5e-7, || format!("rendered {cell} vs {want}"))?;
    }
    Ok("10000 durations and 10000 transcripts within 1e-9; rows Mean/Std/Min/Max".into())
}

// 7. Audio normalization contract.

fn audio_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = 0;
    for rate in [8_000u32, 16_000, 44_100, 48_000] {
        for channels in [1u16, 2] {
            for &frames in &[1usize, 7, 441, rate as usize / 3 + 1, rate as usize * 2 + 13] {
                let samples: Vec<i16> = (0..frames * channels as usize)
                    .map(|_| rng.random_range(-20_000..20_000))
                    .collect();
                let raw = RawMedia {
                    sample_rate: rate,
                    channels,
                    samples,
                };
                let out = normalize_audio(&raw).map_err(|e| e.to_string())?;
                ensure(out.channels() == 1 && out.sample_rate() == 24_000, || {
                    format!("{rate} Hz x{channels}: wrong output format")
                })?;
                let want = (frames as f64 * TARGET_SAMPLE_RATE as f64 / rate as f64).round() as usize;
                ensure(out.samples.len() == want && output_len(frames, rate) == want, || {
                    format!("{rate} Hz, {frames} frames: {} samples, want {want}", out.samples.len())
                })?;
                let again = normalize_audio(&out.to_raw()).map_err(|e| e.to_string())?;
                ensure(again.samples.len() == out.samples.len(), || "re-normalized length".into())?;
                let drift = out
                    .samples
                    .iter()
                    .zip(&again.samples)
                    .map(|(a, b)| (*a as i32 - *b as i32).abs())
                    .max()
                    .unwrap_or(0);
                ensure(drift <= 1, || format!("{rate} Hz: re-normalizing moved a sample by {drift}"))?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} inputs at 8k/16k/44.1k/48k, mono or stereo"))
}

// 8. End-to-end determinism.

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn end_to_end_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut snaps = Vec::new();
    for run in 0..2 {
        let out_dir = tmp.path().join(format!("run{run}"));
        pipeline::run_pipeline(&PipelineConfig {
            world: fixture(60).join("world.json"),
            dumps: fixture(60).join("dumps"),
            out_dir: out_dir.clone(),
            discovery_workers: 3,
            download_workers: 3,
            keyword_limit: None,
            max_pages: 10,
            corruption: 0.0,
            curate: CurateConfig {
                test_size: 3,
                seed: 11,
                ..CurateConfig::default()
            },
        })
        .map_err(|e| e.to_string())?;
        let mut files = snapshot(&out_dir.join("curation"));
        files.insert(
            "manifest.jsonl".into(),
            std::fs::read(out_dir.join("manifest.jsonl")).map_err(|e| e.to_string())?,
        );
        snaps.push(files);
    }
    ensure(snaps[0].keys().eq(snaps[1].keys()), || "different report files".into())?;
    for (name, bytes) in &snaps[0] {
        ensure(snaps[1][name] == *bytes, || format!("{name} differs between runs"))?;
    }
    let manifest_lines = String::from_utf8_lossy(&snaps[0]["manifest.jsonl"]).lines().count();
    ensure(manifest_lines > 0, || "empty manifest".into())?;
    Ok(format!(
        "manifest ({manifest_lines} records) and {} curation files byte-identical",
        snaps[0].len() - 1
    ))
}

// 9. Split sampling.

fn sampling_contract() -> Check {
    let pairs: Vec<UtterancePair> = (0..5000)
        .map(|i| UtterancePair {
            video_id: format!("v{:03}", i / 10),
            cue_index: i % 10,
            language: "en".into(),
            subset: Subset::Manual,
            duration: 1.0 + (i % 7) as f64,
            transcript: format!("utterance {i}"),
            score: Some(0.5),
        })
        .collect();
    let a = sample_splits(&pairs, 1_000_000, 1_000, 3).map_err(|e| e.to_string())?;
    ensure(a.test.len() == 1000 && a.train.len() == 4000, || {
        format!("{} test / {} train", a.test.len(), a.train.len())
    })?;
    let key = |p: &UtterancePair| (p.video_id.clone(), p.cue_index);
    let test: BTreeSet<_> = a.test.iter().map(key).collect();
    let train: BTreeSet<_> = a.train.iter().map(key).collect();
    ensure(test.is_disjoint(&train), || "train and test overlap".into())?;
    ensure(test.len() + train.len() == 5000, || "splits do not cover the corpus".into())?;

    let b = sample_splits(&pairs, 1_000_000, 1_000, 3).map_err(|e| e.to_string())?;
    ensure(a == b, || "same seed gave different splits".into())?;
    let mut reversed = pairs.clone();
    reversed.reverse();
    let c = sample_splits(&reversed, 1_000_000, 1_000, 3).map_err(|e| e.to_string())?;
    ensure(a == c, || "splits depend on input order".into())?;
    let d = sample_splits(&pairs, 1_000_000, 1_000, 4).map_err(|e| e.to_string())?;
    ensure(a.test != d.test, || "different seeds gave the same test set".into())?;
    Ok("1000 test / 4000 train, disjoint, seed-stable".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("coordinator safety", coordinator_safety),
        ("discovery closure", discovery_closure),
        ("classification oracle", classification_oracle),
        ("ctc correctness", ctc_correctness),
        ("threshold semantics", threshold_semantics),
        ("statistics fidelity", statistics_fidelity),
        ("audio contract", audio_contract),
        ("end-to-end determinism", end_to_end_determinism),
        ("sampling contract", sampling_contract),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
