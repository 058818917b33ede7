//! Batch stages wired together: harvest, discovery, download, curation and
//! corpus statistics. Every report is written atomically under an output
//! directory, and every file is a pure function of its inputs and the seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::coordinator::{ClientError, Coordinator, CoordinatorClient, Stats};
use crate::crawl::{discovery_loop, CrawlError, DiscoveryConfig, DiscoveryReport};
use crate::curation::stats::{scripts_table, stats_table};
use crate::curation::{
    self, filter_by_threshold, pairs_from_manifest, sample_splits, score_corpus,
    score_duration_report, threshold_sweep, CtcScorer, CurationError, Scorer, UtterancePair,
};
use crate::download::{
    finalize_manifest, read_manifest, run_download_worker, DownloadConfig, DownloadError,
    DownloadReport, JsonlManifest, ManifestError, ManifestRecord, Subset,
};
use crate::harvester::{self, feed_coordinator, language_distribution, prioritize};
use crate::platform::acoustic::SimAcousticModel;
use crate::platform::{Platform, SimPlatform, WorldError};
use crate::report::{num, write_atomic, write_json, Table};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const CURATION_DIR: &str = "curation";
pub const STATS_DIR: &str = "stats";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(String),
    #[error("i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Coordinator(#[from] ClientError),
    #[error(transparent)]
    Crawl(#[from] CrawlError),
    #[error(transparent)]
    Download(#[from] DownloadError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Curation(#[from] CurationError),
    #[error("worker thread panicked")]
    WorkerPanic,
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    write_atomic(path, text.as_bytes()).map_err(io_at(path))
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    write_json(path, value).map_err(io_at(path))
}

#[derive(Debug, Clone, Serialize)]
pub struct HarvestSummary {
    pub unique_keywords: usize,
    pub fed: usize,
    pub created: usize,
    pub lines_skipped: usize,
}

/// Harvests `dump_dir`, writes the language distribution report, and feeds
/// prioritized keywords to the coordinator.
pub fn harvest_and_feed(
    dump_dir: &Path,
    client: &dyn CoordinatorClient,
    limit: Option<usize>,
    report_path: Option<&Path>,
) -> Result<HarvestSummary, PipelineError> {
    let harvest = harvester::harvest_dir(dump_dir).map_err(io_at(dump_dir))?;
    let entries: Vec<_> = harvest.entries.into_iter().collect();
    let dist = language_distribution(&entries);
    if let Some(path) = report_path {
        write_text(path, &dist.to_table().to_tsv())?;
    }
    let queue = prioritize(&entries, &dist);
    let created = feed_coordinator(&queue, client, limit)?;
    Ok(HarvestSummary {
        unique_keywords: dist.total,
        fed: queue.len().min(limit.unwrap_or(usize::MAX)),
        created,
        lines_skipped: harvest.diagnostics.values().map(|d| d.lines_skipped).sum(),
    })
}

/// Runs `workers` discovery loops in parallel until the queues drain.
pub fn run_discovery(
    client: Arc<dyn CoordinatorClient>,
    platform: Arc<dyn Platform>,
    workers: usize,
    base: &DiscoveryConfig,
) -> Result<DiscoveryReport, PipelineError> {
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers.max(1))
            .map(|i| {
                let mut cfg = base.clone();
                cfg.worker_id = format!("{}-{i}", base.worker_id);
                let (client, platform) = (client.clone(), platform.clone());
                s.spawn(move || discovery_loop(client.as_ref(), platform.as_ref(), &cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join()).collect::<Vec<_>>()
    });
    let mut total = DiscoveryReport::default();
    for r in results {
        total.merge(&r.map_err(|_| PipelineError::WorkerPanic)??);
    }
    Ok(total)
}

/// Runs `workers` download loops in parallel, then finalizes the manifest.
pub fn run_downloads(
    client: Arc<dyn CoordinatorClient>,
    platform: Arc<dyn Platform>,
    workers: usize,
    base: &DownloadConfig,
) -> Result<(DownloadReport, Vec<ManifestRecord>), PipelineError> {
    std::fs::create_dir_all(&base.out_dir).map_err(io_at(&base.out_dir))?;
    let manifest_path = base.out_dir.join(MANIFEST_FILE);
    let sink = JsonlManifest::open(&manifest_path)?;
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers.max(1))
            .map(|i| {
                let mut cfg = base.clone();
                cfg.worker_id = format!("{}-{i}", base.worker_id);
                let (client, platform, sink) = (client.clone(), platform.clone(), &sink);
                s.spawn(move || run_download_worker(client.as_ref(), platform.as_ref(), sink, &cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join()).collect::<Vec<_>>()
    });
    drop(sink);
    let mut total = DownloadReport::default();
    for r in results {
        let r = r.map_err(|_| PipelineError::WorkerPanic)??;
        total.processed += r.processed;
        total.failed += r.failed;
        total.manual += r.manual;
        total.automatic += r.automatic;
        total.unlabeled += r.unlabeled;
        total.downgraded += r.downgraded;
    }
    let records = finalize_manifest(&manifest_path)?;
    Ok((total, records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurateConfig {
    pub threshold: f64,
    pub cap: f64,
    pub sweep_thresholds: Vec<f64>,
    pub sweep_cap: f64,
    pub train_max: usize,
    pub test_size: usize,
    pub seed: u64,
}

impl Default for CurateConfig {
    fn default() -> Self {
        Self {
            threshold: curation::DEFAULT_THRESHOLD,
            cap: curation::DEFAULT_CAP,
            sweep_thresholds: (1..=16).map(f64::from).collect(),
            sweep_cap: curation::SWEEP_CAP,
            train_max: curation::DEFAULT_TRAIN_MAX,
            test_size: curation::DEFAULT_TEST_SIZE,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CurateSummary {
    pub pairs: usize,
    pub scored: usize,
    pub kept: usize,
    pub kept_hours: f64,
    /// Per language: `(train, test)` sizes. Languages with too few kept
    /// pairs for the test size are listed under `skipped_languages`.
    pub splits: BTreeMap<String, (usize, usize)>,
    pub skipped_languages: Vec<String>,
}

fn scores_table(pairs: &[UtterancePair]) -> Table {
    let mut t = Table::new(["video_id", "cue_index", "language", "subset", "duration", "score"]);
    for p in pairs {
        t.push([
            p.video_id.clone(),
            p.cue_index.to_string(),
            p.language.clone(),
            p.subset.to_string(),
            num(p.duration),
            p.score.map_or(String::new(), num),
        ]);
    }
    t
}

fn jsonl(pairs: &[UtterancePair]) -> String {
    let mut out = String::new();
    for p in pairs {
        out.push_str(&serde_json::to_string(p).expect("pairs always serialize"));
        out.push('\n');
    }
    out
}

/// Scores every labeled cue in the manifest and writes filter, sweep,
/// score/duration and split reports under `out_dir/curation`.
pub fn curate(
    out_dir: &Path,
    records: &[ManifestRecord],
    scorer: &dyn Scorer,
    cfg: &CurateConfig,
) -> Result<CurateSummary, PipelineError> {
    if !(cfg.threshold >= 0.0) || !(cfg.cap > 0.0) {
        return Err(PipelineError::Validation(
            "threshold must be >= 0 and cap > 0".into(),
        ));
    }
    let mut pairs = score_corpus(&pairs_from_manifest(records, out_dir)?, scorer);
    pairs.sort_by(|a, b| (&a.video_id, a.cue_index).cmp(&(&b.video_id, b.cue_index)));
    let kept = filter_by_threshold(&pairs, cfg.threshold);
    let dir = out_dir.join(CURATION_DIR);

    let mut summary = CurateSummary {
        pairs: pairs.len(),
        scored: pairs.iter().filter(|p| p.score.is_some()).count(),
        kept: kept.len(),
        kept_hours: kept.iter().map(|p| p.duration).sum::<f64>() / 3600.0,
        ..CurateSummary::default()
    };

    let mut by_lang: BTreeMap<&str, Vec<UtterancePair>> = BTreeMap::new();
    for p in &kept {
        by_lang.entry(&p.language).or_default().push(p.clone());
    }
    for (lang, lang_pairs) in &by_lang {
        if lang_pairs.len() <= cfg.test_size {
            summary.skipped_languages.push(lang.to_string());
            continue;
        }
        let splits = sample_splits(lang_pairs, cfg.train_max, cfg.test_size, cfg.seed)?;
        let split_dir = dir.join("splits").join(lang);
        write_text(&split_dir.join("train.jsonl"), &jsonl(&splits.train))?;
        write_text(&split_dir.join("test.jsonl"), &jsonl(&splits.test))?;
        summary
            .splits
            .insert(lang.to_string(), (splits.train.len(), splits.test.len()));
    }

    let header = |t: Table| {
        t.comment(format!("threshold={:?}", cfg.threshold))
            .comment(format!("cap={}", cfg.cap))
    };
    let mut overview = header(Table::new(["metric", "value"]));
    overview.push(["pairs".to_string(), summary.pairs.to_string()]);
    overview.push(["scored".to_string(), summary.scored.to_string()]);
    overview.push(["kept".to_string(), summary.kept.to_string()]);
    overview.push(["kept_hours".to_string(), num(summary.kept_hours)]);
    write_text(&dir.join("summary.tsv"), &overview.to_tsv())?;
    write_json_file(&dir.join("summary.json"), &summary)?;

    write_text(&dir.join("scores.csv"), &header(scores_table(&pairs)).to_csv())?;
    write_text(&dir.join("kept.jsonl"), &jsonl(&kept))?;

    let sweep = threshold_sweep(&pairs, &cfg.sweep_thresholds, cfg.sweep_cap);
    write_text(&dir.join("sweep.csv"), &sweep.to_table().to_csv())?;
    write_json_file(&dir.join("sweep.json"), &sweep)?;

    let sd = score_duration_report(&pairs, cfg.cap);
    write_text(&dir.join("score_duration.csv"), &sd.scatter_table().to_csv())?;
    write_text(&dir.join("score_histogram.csv"), &sd.histogram_table().to_csv())?;
    Ok(summary)
}

pub fn sim_scorer(world: Arc<SimPlatform>, corruption: f64) -> CtcScorer {
    CtcScorer {
        model: SimAcousticModel::new(world, corruption),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsSummaryReport {
    pub videos: usize,
    pub per_subset_videos: BTreeMap<String, usize>,
    pub total_hours: f64,
    pub utterances: usize,
}

/// Table-2/Table-3 style summaries, language hours and writing systems,
/// written under `out_dir/stats`.
pub fn corpus_stats(
    out_dir: &Path,
    records: &[ManifestRecord],
) -> Result<StatsSummaryReport, PipelineError> {
    let dir = out_dir.join(STATS_DIR);
    let pairs = pairs_from_manifest(records, out_dir)?;
    let labeled = [Subset::Manual, Subset::Automatic];

    let video_cols: Vec<_> = Subset::ALL
        .iter()
        .map(|s| {
            let d: Vec<f64> = records.iter().filter(|r| r.subset == *s).map(|r| r.duration).collect();
            (s.as_str(), curation::duration_stats(&d))
        })
        .collect();
    write_text(&dir.join("video_duration.tsv"), &stats_table(&video_cols).to_tsv())?;

    let utt_cols: Vec<_> = labeled
        .iter()
        .map(|s| {
            let d: Vec<f64> = pairs.iter().filter(|p| p.subset == *s).map(|p| p.duration).collect();
            (s.as_str(), curation::duration_stats(&d))
        })
        .collect();
    write_text(&dir.join("utterance_duration.tsv"), &stats_table(&utt_cols).to_tsv())?;

    let text_cols: Vec<_> = labeled
        .iter()
        .map(|s| {
            let t: Vec<&str> = pairs
                .iter()
                .filter(|p| p.subset == *s)
                .map(|p| p.transcript.as_str())
                .collect();
            (s.as_str(), curation::text_length_stats(&t))
        })
        .collect();
    write_text(&dir.join("text_length.tsv"), &stats_table(&text_cols).to_tsv())?;

    let hours = curation::language_hours(records);
    write_text(&dir.join("language_hours.tsv"), &hours.to_table().to_tsv())?;
    write_json_file(&dir.join("language_hours.json"), &hours)?;

    let transcripts: Vec<&str> = pairs.iter().map(|p| p.transcript.as_str()).collect();
    let scripts = curation::detect_scripts(&transcripts);
    write_text(&dir.join("scripts.tsv"), &scripts_table(&scripts).to_tsv())?;

    let summary = StatsSummaryReport {
        videos: records.len(),
        per_subset_videos: Subset::ALL
            .iter()
            .map(|s| (s.to_string(), records.iter().filter(|r| r.subset == *s).count()))
            .collect(),
        total_hours: hours.total(),
        utterances: pairs.len(),
    };
    write_json_file(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub world: PathBuf,
    pub dumps: PathBuf,
    pub out_dir: PathBuf,
    pub discovery_workers: usize,
    pub download_workers: usize,
    pub keyword_limit: Option<usize>,
    pub max_pages: usize,
    pub corruption: f64,
    pub curate: CurateConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub harvest: HarvestSummary,
    pub discovery: DiscoveryReport,
    pub download: DownloadReport,
    pub curation: CurateSummary,
    pub stats: StatsSummaryReport,
    pub coordinator: Stats,
}

/// The whole flow in one process, against an in-memory coordinator and the
/// simulator. Phases run one after another so outputs are reproducible.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let sim = Arc::new(SimPlatform::load(&cfg.world)?);
    let coordinator = Arc::new(Coordinator::in_memory());
    let client: Arc<dyn CoordinatorClient> = coordinator.clone();
    let platform: Arc<dyn Platform> = sim.clone();

    std::fs::create_dir_all(&cfg.out_dir).map_err(io_at(&cfg.out_dir))?;
    let manifest = cfg.out_dir.join(MANIFEST_FILE);
    if manifest.exists() {
        std::fs::remove_file(&manifest).map_err(io_at(&manifest))?;
    }

    let harvest = harvest_and_feed(
        &cfg.dumps,
        client.as_ref(),
        cfg.keyword_limit,
        Some(&cfg.out_dir.join("keywords.tsv")),
    )?;

    let mut dcfg = DiscoveryConfig::new("discovery");
    dcfg.max_pages = cfg.max_pages;
    let discovery = run_discovery(client.clone(), platform.clone(), cfg.discovery_workers, &dcfg)?;

    let wcfg = DownloadConfig::new("download", &cfg.out_dir);
    let (download, records) = run_downloads(client.clone(), platform, cfg.download_workers, &wcfg)?;

    let scorer = sim_scorer(sim, cfg.corruption);
    let curation = curate(&cfg.out_dir, &records, &scorer, &cfg.curate)?;
    let stats = corpus_stats(&cfg.out_dir, &records)?;
    let report = PipelineReport {
        harvest,
        discovery,
        download,
        curation,
        stats,
        coordinator: Coordinator::stats(&coordinator),
    };
    Ok(report)
}

/// Reads a finalized manifest, or an empty one if the file does not exist.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestRecord>, PipelineError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    Ok(read_manifest(path)?)
}
