mod config;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use speechcrawl::coordinator::http::{spawn_server, HttpCoordinatorClient};
use speechcrawl::coordinator::{Coordinator, CoordinatorClient, JournalStore, LeaseConfig, MemoryStore, Store};
use speechcrawl::crawl::DiscoveryConfig;
use speechcrawl::download::{DownloadConfig, ResolveMode};
use speechcrawl::pipeline::{self, CurateConfig, PipelineConfig, MANIFEST_FILE};
use speechcrawl::platform::http::{spawn_platform_server, HttpPlatform};
use speechcrawl::platform::worldgen::{generate, GenConfig};
use speechcrawl::platform::{LivePlatformStub, Platform, SimPlatform};
use speechcrawl::report::write_atomic;

use config::{PlatformConfig, RunConfig};

const COORDINATOR_ENV: &str = "SPEECHCRAWL_COORDINATOR_URL";

#[derive(Parser)]
#[command(name = "speechcrawl", version, about = "Crawl, download and curate a subtitled speech corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the run commands; each overrides the config file.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = COORDINATOR_ENV)]
    coordinator_url: Option<String>,
    /// Use the in-process simulator with this world file.
    #[arg(long, conflicts_with_all = ["platform_url", "live_stub"])]
    world: Option<PathBuf>,
    /// Use a platform served over HTTP.
    #[arg(long, conflicts_with = "live_stub")]
    platform_url: Option<String>,
    #[arg(long)]
    live_stub: bool,
    #[arg(long)]
    discovery_workers: Option<usize>,
    #[arg(long)]
    download_workers: Option<usize>,
    #[arg(long)]
    lease_s: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    cap: Option<f64>,
    /// Output directory; every other output path is relative to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_pages: Option<usize>,
    /// Acoustic model corruption in [0, 1].
    #[arg(long)]
    corruption: Option<f64>,
    #[arg(long)]
    test_size: Option<usize>,
    #[arg(long)]
    train_max: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if let Some(u) = &self.coordinator_url {
            cfg.coordinator_url = Some(u.clone());
        }
        if let Some(w) = &self.world {
            cfg.platform = Some(PlatformConfig::Sim { world: w.clone() });
        }
        if let Some(u) = &self.platform_url {
            cfg.platform = Some(PlatformConfig::Http { url: u.clone() });
        }
        if self.live_stub {
            cfg.platform = Some(PlatformConfig::LiveStub);
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { cfg.$($field).+ = v; })*
            };
        }
        set!(
            discovery_workers => workers.discovery,
            download_workers => workers.download,
            lease_s => lease_duration_s,
            threshold => threshold,
            cap => cap,
            out => out_dir,
            seed => seed,
            max_pages => max_pages,
            corruption => corruption,
            test_size => test_size,
            train_max => train_max,
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the coordinator HTTP service until interrupted.
    Serve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "127.0.0.1:7878")]
        bind: SocketAddr,
        /// Persist state in this directory (journal + snapshot).
        #[arg(long)]
        journal: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        reap_interval_ms: u64,
    },
    /// Extract keywords from `<lang>.txt` dumps and feed them to the coordinator.
    Harvest {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        dumps: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Run keyword and channel discovery workers until the queues drain.
    Crawl {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run download workers until no videos remain; writes the manifest.
    Download {
        #[command(flatten)]
        run: RunArgs,
        /// Label only videos with a single subtitle track.
        #[arg(long)]
        strict: bool,
    },
    /// Score, filter and split the corpus; writes curation reports.
    Curate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Duration, text length, language hours and writing system reports.
    Stats {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Harvest, crawl, download, curate and report in one process.
    Pipeline {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        dumps: PathBuf,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Generate a simulator world and matching text dumps.
    GenWorld {
        #[arg(long, default_value_t = 12)]
        videos: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        page_size: usize,
        #[arg(long)]
        world_out: PathBuf,
        #[arg(long)]
        dumps_out: PathBuf,
    },
    /// Serve a world file over HTTP until interrupted.
    ServePlatform {
        #[arg(long)]
        world: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7879")]
        bind: SocketAddr,
    },
}

/// Finished, but some work is incomplete (exit code 2).
enum Outcome {
    Done,
    Partial,
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(value)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn wait_for_signal() -> anyhow::Result<()> {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()?
        .block_on(tokio::signal::ctrl_c())?;
    Ok(())
}

fn coordinator_client(cfg: &RunConfig) -> anyhow::Result<Arc<dyn CoordinatorClient>> {
    let url = cfg
        .coordinator_url
        .as_deref()
        .ok_or_else(|| anyhow!("no coordinator URL: pass --coordinator-url or set {COORDINATOR_ENV}"))?;
    Ok(Arc::new(HttpCoordinatorClient::new(url)?))
}

fn platform(cfg: &RunConfig) -> anyhow::Result<Arc<dyn Platform>> {
    Ok(match &cfg.platform {
        Some(PlatformConfig::Sim { world }) => Arc::new(
            SimPlatform::load(world).with_context(|| format!("loading world {}", world.display()))?,
        ),
        Some(PlatformConfig::Http { url }) => Arc::new(HttpPlatform::new(url)?),
        Some(PlatformConfig::LiveStub) => Arc::new(LivePlatformStub),
        None => bail!("no platform: pass --world, --platform-url or --live-stub"),
    })
}

fn sim_world(cfg: &RunConfig) -> anyhow::Result<Arc<SimPlatform>> {
    match &cfg.platform {
        Some(PlatformConfig::Sim { world }) => Ok(Arc::new(SimPlatform::load(world)?)),
        _ => bail!("scoring needs the simulator world: pass --world"),
    }
}

fn curate_config(cfg: &RunConfig) -> CurateConfig {
    CurateConfig {
        threshold: cfg.threshold,
        cap: cfg.cap,
        train_max: cfg.train_max,
        test_size: cfg.test_size,
        seed: cfg.seed,
        ..CurateConfig::default()
    }
}

fn run(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Serve {
            run,
            bind,
            journal,
            reap_interval_ms,
        } => {
            let cfg = run.resolve()?;
            let lease = LeaseConfig::new(Duration::from_secs_f64(cfg.lease_duration_s))?;
            let store: Box<dyn Store> = match &journal {
                Some(dir) => Box::new(JournalStore::open(dir)?),
                None => Box::new(MemoryStore::new()),
            };
            let coordinator = Arc::new(Coordinator::open(store, lease)?);
            let server = spawn_server(coordinator, bind, Duration::from_millis(reap_interval_ms))?;
            tracing::info!(url = %server.url(), "coordinator listening");
            wait_for_signal()?;
            server.stop()?;
            Ok(Outcome::Done)
        }
        Command::Harvest { run, dumps, limit } => {
            let cfg = run.resolve()?;
            let client = coordinator_client(&cfg)?;
            let report = cfg.out_dir.join("keywords.tsv");
            let summary = pipeline::harvest_and_feed(&dumps, client.as_ref(), limit, Some(&report))?;
            print_json(&summary)?;
            Ok(Outcome::Done)
        }
        Command::Crawl { run } => {
            let cfg = run.resolve()?;
            let client = coordinator_client(&cfg)?;
            let mut dcfg = DiscoveryConfig::new("discovery");
            dcfg.max_pages = cfg.max_pages;
            let report = pipeline::run_discovery(client, platform(&cfg)?, cfg.workers.discovery, &dcfg)?;
            print_json(&report)?;
            Ok(if report.partial_crawls > 0 || report.failed_channels > 0 {
                Outcome::Partial
            } else {
                Outcome::Done
            })
        }
        Command::Download { run, strict } => {
            let cfg = run.resolve()?;
            let client = coordinator_client(&cfg)?;
            let mut dcfg = DownloadConfig::new("download", &cfg.out_dir);
            if strict {
                dcfg.mode = ResolveMode::Strict;
            }
            let (report, _) =
                pipeline::run_downloads(client, platform(&cfg)?, cfg.workers.download, &dcfg)?;
            print_json(&report)?;
            Ok(if report.failed > 0 { Outcome::Partial } else { Outcome::Done })
        }
        Command::Curate { run, manifest } => {
            let cfg = run.resolve()?;
            let path = manifest.unwrap_or_else(|| cfg.out_dir.join(MANIFEST_FILE));
            let records = speechcrawl::download::read_manifest(&path)
                .with_context(|| format!("reading manifest {}", path.display()))?;
            let scorer = pipeline::sim_scorer(sim_world(&cfg)?, cfg.corruption);
            let summary = pipeline::curate(&cfg.out_dir, &records, &scorer, &curate_config(&cfg))?;
            print_json(&summary)?;
            Ok(Outcome::Done)
        }
        Command::Stats { run, manifest } => {
            let cfg = run.resolve()?;
            let path = manifest.unwrap_or_else(|| cfg.out_dir.join(MANIFEST_FILE));
            let records = pipeline::load_manifest(&path)?;
            let summary = pipeline::corpus_stats(&cfg.out_dir, &records)?;
            print_json(&summary)?;
            Ok(Outcome::Done)
        }
        Command::Pipeline { run, dumps, limit } => {
            let cfg = run.resolve()?;
            let world = match &cfg.platform {
                Some(PlatformConfig::Sim { world }) => world.clone(),
                _ => bail!("the pipeline runs against the simulator: pass --world"),
            };
            let report = pipeline::run_pipeline(&PipelineConfig {
                world,
                dumps,
                out_dir: cfg.out_dir.clone(),
                discovery_workers: cfg.workers.discovery,
                download_workers: cfg.workers.download,
                keyword_limit: limit,
                max_pages: cfg.max_pages,
                corruption: cfg.corruption,
                curate: curate_config(&cfg),
            })?;
            print_json(&report)?;
            let partial = report.discovery.partial_crawls > 0
                || report.discovery.failed_channels > 0
                || report.download.failed > 0;
            Ok(if partial { Outcome::Partial } else { Outcome::Done })
        }
        Command::GenWorld {
            videos,
            seed,
            page_size,
            world_out,
            dumps_out,
        } => {
            if page_size == 0 {
                bail!("page size must be >= 1");
            }
            let generated = generate(GenConfig {
                videos,
                seed,
                page_size,
            });
            write_atomic(&world_out, generated.world.to_json_pretty().as_bytes())?;
            for (lang, body) in &generated.dumps {
                write_atomic(&dumps_out.join(format!("{lang}.txt")), body)?;
            }
            print_json(&serde_json::json!({
                "videos": generated.world.videos.len(),
                "dumps": generated.dumps.len(),
            }))?;
            Ok(Outcome::Done)
        }
        Command::ServePlatform { world, bind } => {
            let sim = SimPlatform::load(&world)?;
            let server = spawn_platform_server(Arc::new(sim), bind)?;
            tracing::info!(url = %server.url(), "platform listening");
            wait_for_signal()?;
            server.stop()?;
            Ok(Outcome::Done)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .json()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    // Usage errors are validation errors (exit 1); 2 is reserved for partial runs.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => {
            tracing::warn!("finished with incomplete work");
            ExitCode::from(2)
        }
        Err(e) => {
            tracing::error!(error = format!("{e:#}"), "command failed");
            ExitCode::from(1)
        }
    }
}
