use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Opaque resource identifier handed out by the coordinator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResourceId(pub String);

impl ResourceId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ResourceId {
    fn from(value: &str) -> Self {
        Self(value.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceKind {
    Keyword,
    Channel,
    Video,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 3] = [Self::Keyword, Self::Channel, Self::Video];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Keyword => "keyword",
            Self::Channel => "channel",
            Self::Video => "video",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Self::Keyword => 0,
            Self::Channel => 1,
            Self::Video => 2,
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            Self::Keyword => "kw",
            Self::Channel => "ch",
            Self::Video => "vd",
        }
    }

    pub(crate) fn make_id(self, seq: u64) -> ResourceId {
        ResourceId(format!("{}-{seq:08}", self.id_prefix()))
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keyword" => Ok(Self::Keyword),
            "channel" => Ok(Self::Channel),
            "video" => Ok(Self::Video),
            other => Err(format!("unknown resource kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceState {
    NotStarted,
    InProgress,
    Done,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub worker_id: String,
    /// Offset on the coordinator's monotonic clock.
    pub expires_at: Duration,
}

/// A unit of coordinator-managed work.
///
/// `state == InProgress` exactly when `lease` is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub id: ResourceId,
    pub kind: ResourceKind,
    pub payload: String,
    pub state: ResourceState,
    pub lease: Option<Lease>,
    pub result: Option<String>,
    /// Worker that moved the resource to `Done`.
    pub completed_by: Option<String>,
    /// Insertion order, used for FIFO dispatch.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddOutcome {
    pub id: ResourceId,
    pub created: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompleteOutcome {
    Completed,
    /// The same worker already completed this resource.
    AlreadyDone,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateCounts {
    pub not_started: u64,
    pub in_progress: u64,
    pub done: u64,
}

impl StateCounts {
    pub fn total(&self) -> u64 {
        self.not_started + self.in_progress + self.done
    }

    pub(crate) fn bump(&mut self, state: ResourceState) {
        match state {
            ResourceState::NotStarted => self.not_started += 1,
            ResourceState::InProgress => self.in_progress += 1,
            ResourceState::Done => self.done += 1,
        }
    }
}

/// Per-kind, per-state counts as served on `GET /stats`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub keyword: StateCounts,
    pub channel: StateCounts,
    pub video: StateCounts,
}

impl Stats {
    pub fn get(&self, kind: ResourceKind) -> StateCounts {
        match kind {
            ResourceKind::Keyword => self.keyword,
            ResourceKind::Channel => self.channel,
            ResourceKind::Video => self.video,
        }
    }

    pub(crate) fn get_mut(&mut self, kind: ResourceKind) -> &mut StateCounts {
        match kind {
            ResourceKind::Keyword => &mut self.keyword,
            ResourceKind::Channel => &mut self.channel,
            ResourceKind::Video => &mut self.video,
        }
    }

    pub fn total(&self) -> u64 {
        ResourceKind::ALL.iter().map(|k| self.get(*k).total()).sum()
    }
}

/// Mutation recorded by a [`super::Store`] before it is applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Added {
        id: ResourceId,
        kind: ResourceKind,
        payload: String,
    },
    Acquired {
        id: ResourceId,
        worker_id: String,
        expires_at_us: u64,
    },
    Completed {
        id: ResourceId,
        worker_id: String,
        result: Option<String>,
    },
    Expired {
        id: ResourceId,
        worker_id: String,
    },
}

impl Event {
    pub fn resource_id(&self) -> &ResourceId {
        match self {
            Event::Added { id, .. }
            | Event::Acquired { id, .. }
            | Event::Completed { id, .. }
            | Event::Expired { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    /// Global, gap-free event sequence number.
    pub seq: u64,
    /// Clock reading when the event was applied, in microseconds.
    pub at_us: u64,
    #[serde(flatten)]
    pub event: Event,
}
