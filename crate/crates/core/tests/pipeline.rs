use std::path::{Path, PathBuf};

use speechcrawl::coordinator::ResourceKind;
use speechcrawl::pipeline::{run_pipeline, CurateConfig, PipelineConfig, PipelineReport};

fn fixture(n: usize) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("fixtures/world_{n}"))
}

fn config(out: &Path, test_size: usize) -> PipelineConfig {
    PipelineConfig {
        world: fixture(12).join("world.json"),
        dumps: fixture(12).join("dumps"),
        out_dir: out.to_path_buf(),
        discovery_workers: 2,
        download_workers: 2,
        keyword_limit: None,
        max_pages: 10,
        corruption: 0.0,
        curate: CurateConfig {
            test_size,
            ..CurateConfig::default()
        },
    }
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn rerun_over_existing_outputs_replaces_them() {
    let dir = tempfile::tempdir().unwrap();
    let first: PipelineReport = run_pipeline(&config(dir.path(), 1)).unwrap();
    let manifest = read(dir.path().join("manifest.jsonl"));
    let summary = read(dir.path().join("curation/summary.tsv"));
    let second = run_pipeline(&config(dir.path(), 1)).unwrap();
    assert_eq!(manifest, read(dir.path().join("manifest.jsonl")));
    assert_eq!(summary, read(dir.path().join("curation/summary.tsv")));
    assert_eq!(first.download.processed, second.download.processed);
    assert_eq!(manifest.lines().count(), first.download.processed);
}

#[test]
fn reports_are_written_with_expected_layout() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&config(dir.path(), 1)).unwrap();
    let out = dir.path();

    assert!(report.discovery.videos_added > 0);
    let done: u64 = [ResourceKind::Keyword, ResourceKind::Channel, ResourceKind::Video]
        .iter()
        .map(|&k| report.coordinator.get(k).done)
        .sum();
    assert_eq!(report.coordinator.total(), done);

    for table in ["video_duration.tsv", "utterance_duration.tsv", "text_length.tsv"] {
        let text = read(out.join("stats").join(table));
        let firsts: Vec<&str> = text.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
        assert_eq!(firsts, ["Mean", "Std", "Min", "Max"], "{table}");
    }
    let hours = read(out.join("stats/language_hours.tsv"));
    assert!(hours.starts_with("# unlabeled_hours="));

    let sweep = read(out.join("curation/sweep.csv"));
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "# cap=16");
    assert_eq!(lines[1], "threshold,kept_count,kept_hours");
    assert_eq!(lines.len(), 2 + 16);
    let counts: Vec<usize> = lines[2..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]));

    let summary = read(out.join("curation/summary.tsv"));
    assert!(summary.starts_with("# threshold=2.0\n# cap=20\n"));
    let kept = read(out.join("curation/kept.jsonl")).lines().count();
    assert_eq!(kept, report.curation.kept);
    for (lang, (train, test)) in &report.curation.splits {
        let split = out.join("curation/splits").join(lang);
        assert_eq!(read(split.join("train.jsonl")).lines().count(), *train);
        assert_eq!(read(split.join("test.jsonl")).lines().count(), *test);
        assert_eq!(*test, 1);
    }
}

#[test]
fn oversized_test_split_skips_languages() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&config(dir.path(), 10_000)).unwrap();
    assert!(report.curation.splits.is_empty());
    assert!(!report.curation.skipped_languages.is_empty());
}

#[test]
fn missing_world_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 1);
    cfg.world = dir.path().join("absent.json");
    assert!(run_pipeline(&cfg).is_err());
}
