//! JSON-lines corpus manifest: one [`ManifestRecord`] per processed video.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::model::SubtitleKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Manual,
    Automatic,
    Unlabeled,
}

impl Subset {
    pub const ALL: [Subset; 3] = [Self::Manual, Self::Automatic, Self::Unlabeled];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Manual => "manual",
            Self::Automatic => "automatic",
            Self::Unlabeled => "unlabeled",
        }
    }

    pub fn subtitle_kind(self) -> Option<SubtitleKind> {
        match self {
            Self::Manual => Some(SubtitleKind::Manual),
            Self::Automatic => Some(SubtitleKind::Automatic),
            Self::Unlabeled => None,
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Paths are relative to the run's output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub video_id: String,
    pub channel_id: String,
    pub subset: Subset,
    pub language: Option<String>,
    pub audio_path: String,
    pub subtitle_path: Option<String>,
    pub duration: f64,
    pub num_cues: usize,
}

impl ManifestRecord {
    /// `unlabeled` exactly when language and subtitle path are absent.
    pub fn is_consistent(&self) -> bool {
        let unlabeled = self.subset == Subset::Unlabeled;
        unlabeled == self.language.is_none() && unlabeled == self.subtitle_path.is_none()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("manifest i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub trait ManifestSink: Send + Sync {
    fn append(&self, record: &ManifestRecord) -> Result<(), ManifestError>;
}

/// Appends whole lines under a lock; each record is written with a single
/// `write_all`, so concurrent workers never interleave partial lines.
#[derive(Debug)]
pub struct JsonlManifest {
    path: PathBuf,
    file: Mutex<File>,
}

impl JsonlManifest {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ManifestError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| ManifestError::Io {
                path: path.clone(),
                source,
            })?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl ManifestSink for JsonlManifest {
    fn append(&self, record: &ManifestRecord) -> Result<(), ManifestError> {
        let mut line = serde_json::to_vec(record).expect("manifest records always serialize");
        line.push(b'\n');
        let mut file = self.file.lock().expect("manifest lock poisoned");
        file.write_all(&line)
            .and_then(|_| file.flush())
            .map_err(|source| ManifestError::Io {
                path: self.path.clone(),
                source,
            })
    }
}

#[derive(Debug, Default)]
pub struct MemoryManifest {
    records: Mutex<Vec<ManifestRecord>>,
}

impl MemoryManifest {
    pub fn records(&self) -> Vec<ManifestRecord> {
        self.records.lock().expect("manifest lock poisoned").clone()
    }
}

impl ManifestSink for MemoryManifest {
    fn append(&self, record: &ManifestRecord) -> Result<(), ManifestError> {
        self.records
            .lock()
            .expect("manifest lock poisoned")
            .push(record.clone());
        Ok(())
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>, ManifestError> {
    let path = path.as_ref();
    let io_err = |source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| ManifestError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_manifest(
    path: impl AsRef<Path>,
    records: &[ManifestRecord],
) -> Result<(), ManifestError> {
    let path = path.as_ref();
    let mut body = Vec::new();
    for r in records {
        serde_json::to_writer(&mut body, r).expect("manifest records always serialize");
        body.push(b'\n');
    }
    crate::report::write_atomic(path, &body).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Rewrites the manifest sorted by video id, keeping the last record for a
/// repeated id. Makes the file independent of worker interleaving.
pub fn finalize_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>, ManifestError> {
    let path = path.as_ref();
    let mut by_id = BTreeMap::new();
    for r in read_manifest(path)? {
        by_id.insert(r.video_id.clone(), r);
    }
    let records: Vec<_> = by_id.into_values().collect();
    write_manifest(path, &records)?;
    Ok(records)
}
