//! Persistence backends for the coordinator.
//!
//! A store sees every mutation as a [`LoggedEvent`] before the coordinator
//! applies it. On startup the coordinator rebuilds its table from the
//! snapshot plus every journaled event newer than the snapshot.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::types::{LoggedEvent, Resource};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("store i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt journal {path} at line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Default, Clone)]
pub struct Recovered {
    pub snapshot: Vec<Resource>,
    /// Sequence number of the last event folded into `snapshot`.
    pub snapshot_seq: u64,
    pub events: Vec<LoggedEvent>,
}

pub trait Store: Send {
    fn load(&mut self) -> Result<Recovered, StoreError>;

    fn append(&mut self, event: &LoggedEvent) -> Result<(), StoreError>;

    fn wants_compaction(&self) -> bool {
        false
    }

    fn compact(&mut self, _resources: &[Resource], _last_seq: u64) -> Result<(), StoreError> {
        Ok(())
    }
}

/// Shared handle onto the events a [`MemoryStore`] has accepted.
#[derive(Debug, Clone, Default)]
pub struct EventLog(Arc<Mutex<Vec<LoggedEvent>>>);

impl EventLog {
    pub fn events(&self) -> Vec<LoggedEvent> {
        self.0.lock().expect("event log poisoned").clone()
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("event log poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Volatile store. Keeps the full event log so tests can audit it.
#[derive(Debug, Default)]
pub struct MemoryStore {
    log: EventLog,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// A store that replays an existing log on load.
    pub fn with_log(log: EventLog) -> Self {
        Self { log }
    }

    pub fn log(&self) -> EventLog {
        self.log.clone()
    }
}

impl Store for MemoryStore {
    fn load(&mut self) -> Result<Recovered, StoreError> {
        Ok(Recovered {
            events: self.log.events(),
            ..Recovered::default()
        })
    }

    fn append(&mut self, event: &LoggedEvent) -> Result<(), StoreError> {
        self.log
            .0
            .lock()
            .expect("event log poisoned")
            .push(event.clone());
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct SnapshotFile {
    last_seq: u64,
    resources: Vec<Resource>,
}

/// Single-directory append-only journal with snapshot compaction.
///
/// Layout: `journal.jsonl` (one event per line) and `snapshot.json`.
/// A torn final journal line, left by a crash mid-write, is discarded on load.
#[derive(Debug)]
pub struct JournalStore {
    dir: PathBuf,
    journal: Option<File>,
    appended_since_compaction: usize,
    compact_every: usize,
    sync: bool,
}

pub const DEFAULT_COMPACT_EVERY: usize = 10_000;

impl JournalStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir,
            journal: None,
            appended_since_compaction: 0,
            compact_every: DEFAULT_COMPACT_EVERY,
            sync: false,
        })
    }

    pub fn compact_every(mut self, events: usize) -> Self {
        self.compact_every = events.max(1);
        self
    }

    /// fsync after every append.
    pub fn sync_writes(mut self, sync: bool) -> Self {
        self.sync = sync;
        self
    }

    pub fn journal_path(&self) -> PathBuf {
        self.dir.join("journal.jsonl")
    }

    pub fn snapshot_path(&self) -> PathBuf {
        self.dir.join("snapshot.json")
    }

    fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
        move |source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn read_snapshot(&self) -> Result<Option<SnapshotFile>, StoreError> {
        let path = self.snapshot_path();
        if !path.exists() {
            return Ok(None);
        }
        let bytes = fs::read(&path).map_err(Self::io_err(&path))?;
        serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| StoreError::Corrupt {
                path: path.clone(),
                line: 0,
                message: e.to_string(),
            })
    }

    fn read_journal(&self) -> Result<(Vec<LoggedEvent>, u64), StoreError> {
        let path = self.journal_path();
        if !path.exists() {
            return Ok((Vec::new(), 0));
        }
        let file = File::open(&path).map_err(Self::io_err(&path))?;
        let mut reader = BufReader::new(file);
        let mut events = Vec::new();
        let mut good_len: u64 = 0;
        let mut line = String::new();
        let mut line_no = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(Self::io_err(&path))?;
            if n == 0 {
                break;
            }
            line_no += 1;
            // An unterminated final line is a torn write.
            if !line.ends_with('\n') {
                break;
            }
            let event = serde_json::from_str::<LoggedEvent>(line.trim_end()).map_err(|e| {
                StoreError::Corrupt {
                    path: path.clone(),
                    line: line_no,
                    message: e.to_string(),
                }
            })?;
            events.push(event);
            good_len += n as u64;
        }
        Ok((events, good_len))
    }

    fn journal_file(&mut self) -> Result<&mut File, StoreError> {
        if self.journal.is_none() {
            let path = self.journal_path();
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(Self::io_err(&path))?;
            self.journal = Some(file);
        }
        Ok(self.journal.as_mut().expect("journal opened above"))
    }
}

impl Store for JournalStore {
    fn load(&mut self) -> Result<Recovered, StoreError> {
        let snapshot = self.read_snapshot()?;
        let (events, good_len) = self.read_journal()?;
        let path = self.journal_path();
        if path.exists() {
            let actual = fs::metadata(&path).map_err(Self::io_err(&path))?.len();
            if actual != good_len {
                let file = OpenOptions::new()
                    .write(true)
                    .open(&path)
                    .map_err(Self::io_err(&path))?;
                file.set_len(good_len).map_err(Self::io_err(&path))?;
            }
        }
        let (resources, snapshot_seq) = snapshot
            .map(|s| (s.resources, s.last_seq))
            .unwrap_or_default();
        let events: Vec<_> = events
            .into_iter()
            .filter(|e| e.seq > snapshot_seq)
            .collect();
        self.appended_since_compaction = events.len();
        Ok(Recovered {
            snapshot: resources,
            snapshot_seq,
            events,
        })
    }

    fn append(&mut self, event: &LoggedEvent) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(event).expect("events always serialize");
        line.push(b'\n');
        let path = self.journal_path();
        let sync = self.sync;
        let file = self.journal_file()?;
        file.write_all(&line).map_err(Self::io_err(&path))?;
        if sync {
            file.sync_data().map_err(Self::io_err(&path))?;
        }
        self.appended_since_compaction += 1;
        Ok(())
    }

    fn wants_compaction(&self) -> bool {
        self.appended_since_compaction >= self.compact_every
    }

    fn compact(&mut self, resources: &[Resource], last_seq: u64) -> Result<(), StoreError> {
        let snapshot = SnapshotFile {
            last_seq,
            resources: resources.to_vec(),
        };
        let tmp = self.dir.join("snapshot.json.tmp");
        let bytes = serde_json::to_vec(&snapshot).expect("snapshot always serializes");
        {
            let mut file = File::create(&tmp).map_err(Self::io_err(&tmp))?;
            file.write_all(&bytes).map_err(Self::io_err(&tmp))?;
            file.sync_all().map_err(Self::io_err(&tmp))?;
        }
        let target = self.snapshot_path();
        fs::rename(&tmp, &target).map_err(Self::io_err(&target))?;
        // Events up to last_seq are now in the snapshot; a crash before the
        // truncate below is harmless because load() skips them by seq.
        self.journal = None;
        let path = self.journal_path();
        File::create(&path).map_err(Self::io_err(&path))?;
        self.appended_since_compaction = 0;
        Ok(())
    }
}
