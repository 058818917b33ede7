//! Central work registry: resources (keywords, channels, videos) move from
//! `NotStarted` to `InProgress` under a time-bounded lease and then to `Done`.
//! A lease that runs out sends the resource back to `NotStarted`; no other
//! transitions exist.

mod client;
mod clock;
pub mod http;
mod store;
mod types;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

pub use client::{ClientError, CoordinatorClient};
pub use clock::{Clock, ManualClock, SystemClock};
pub use store::{
    EventLog, JournalStore, MemoryStore, Recovered, Store, StoreError, DEFAULT_COMPACT_EVERY,
};
pub use types::{
    AddOutcome, CompleteOutcome, Event, Lease, LoggedEvent, Resource, ResourceId, ResourceKind,
    ResourceState, StateCounts, Stats,
};

pub const DEFAULT_LEASE_DURATION: Duration = Duration::from_secs(300);

#[derive(Debug, thiserror::Error)]
pub enum CoordinatorError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("unknown resource {0}")]
    NotFound(ResourceId),
    #[error("stale lease on {id}: worker {worker_id} no longer holds it")]
    StaleLease { id: ResourceId, worker_id: String },
    #[error("resource {id} is {state:?}, cannot complete")]
    InvalidState { id: ResourceId, state: ResourceState },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Clone)]
pub struct LeaseConfig {
    duration: Duration,
    clock: Arc<dyn Clock>,
}

impl LeaseConfig {
    pub fn new(duration: Duration) -> Result<Self, CoordinatorError> {
        if duration.is_zero() {
            return Err(CoordinatorError::Validation(
                "lease duration must be positive".into(),
            ));
        }
        Ok(Self {
            duration,
            clock: Arc::new(SystemClock::new()),
        })
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn duration(&self) -> Duration {
        self.duration
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }
}

impl Default for LeaseConfig {
    fn default() -> Self {
        Self::new(DEFAULT_LEASE_DURATION).expect("default lease duration is positive")
    }
}

impl std::fmt::Debug for LeaseConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LeaseConfig")
            .field("duration", &self.duration)
            .finish_non_exhaustive()
    }
}

#[derive(Default)]
struct Table {
    resources: Vec<Resource>,
    by_id: HashMap<ResourceId, usize>,
    by_key: HashMap<(ResourceKind, String), usize>,
    /// NotStarted resources per kind, ordered by insertion seq.
    pending: [BTreeSet<u64>; 3],
    /// (expires_at, seq) of every live lease.
    leases: BTreeSet<(Duration, u64)>,
}

impl Table {
    fn index_of(&self, id: &ResourceId) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    fn insert(&mut self, resource: Resource) {
        let idx = self.resources.len();
        debug_assert_eq!(resource.seq as usize, idx);
        self.by_id.insert(resource.id.clone(), idx);
        self.by_key
            .insert((resource.kind, resource.payload.clone()), idx);
        match (&resource.state, &resource.lease) {
            (ResourceState::NotStarted, _) => {
                self.pending[resource.kind.index()].insert(resource.seq);
            }
            (ResourceState::InProgress, Some(lease)) => {
                self.leases.insert((lease.expires_at, resource.seq));
            }
            _ => {}
        }
        self.resources.push(resource);
    }

    /// Applies an already-validated event. `lease_expiry` overrides the
    /// recorded expiry (used when replaying a journal under a fresh clock).
    fn apply(&mut self, event: &Event, lease_expiry: Option<Duration>) {
        match event {
            Event::Added { id, kind, payload } => {
                let seq = self.resources.len() as u64;
                self.insert(Resource {
                    id: id.clone(),
                    kind: *kind,
                    payload: payload.clone(),
                    state: ResourceState::NotStarted,
                    lease: None,
                    result: None,
                    completed_by: None,
                    seq,
                });
            }
            Event::Acquired {
                id,
                worker_id,
                expires_at_us,
            } => {
                let idx = self.by_id[id];
                let expires_at =
                    lease_expiry.unwrap_or_else(|| Duration::from_micros(*expires_at_us));
                let r = &mut self.resources[idx];
                self.pending[r.kind.index()].remove(&r.seq);
                r.state = ResourceState::InProgress;
                r.lease = Some(Lease {
                    worker_id: worker_id.clone(),
                    expires_at,
                });
                self.leases.insert((expires_at, r.seq));
            }
            Event::Completed {
                id,
                worker_id,
                result,
            } => {
                let idx = self.by_id[id];
                let r = &mut self.resources[idx];
                if let Some(lease) = r.lease.take() {
                    self.leases.remove(&(lease.expires_at, r.seq));
                }
                r.state = ResourceState::Done;
                r.result = result.clone();
                r.completed_by = Some(worker_id.clone());
            }
            Event::Expired { id, .. } => {
                let idx = self.by_id[id];
                let r = &mut self.resources[idx];
                if let Some(lease) = r.lease.take() {
                    self.leases.remove(&(lease.expires_at, r.seq));
                }
                r.state = ResourceState::NotStarted;
                self.pending[r.kind.index()].insert(r.seq);
            }
        }
    }
}

struct Inner {
    table: Table,
    store: Box<dyn Store>,
    next_event_seq: u64,
}

impl Inner {
    fn record(&mut self, now: Duration, event: Event) -> Result<(), StoreError> {
        let logged = LoggedEvent {
            seq: self.next_event_seq,
            at_us: now.as_micros() as u64,
            event,
        };
        self.store.append(&logged)?;
        self.next_event_seq += 1;
        self.table.apply(&logged.event, None);
        Ok(())
    }

    fn maybe_compact(&mut self) -> Result<(), StoreError> {
        if self.store.wants_compaction() {
            let last = self.next_event_seq - 1;
            self.store.compact(&self.table.resources, last)?;
        }
        Ok(())
    }

    fn release_expired(&mut self, now: Duration) -> Result<usize, StoreError> {
        let expired: Vec<u64> = self
            .table
            .leases
            .iter()
            .take_while(|(expires_at, _)| *expires_at < now)
            .map(|(_, seq)| *seq)
            .collect();
        for seq in &expired {
            let r = &self.table.resources[*seq as usize];
            let event = Event::Expired {
                id: r.id.clone(),
                worker_id: r
                    .lease
                    .as_ref()
                    .map(|l| l.worker_id.clone())
                    .unwrap_or_default(),
            };
            self.record(now, event)?;
        }
        Ok(expired.len())
    }
}

/// The coordinator service. All operations are linearizable: a single mutex
/// serializes mutations and each event is persisted before it is applied.
pub struct Coordinator {
    inner: Mutex<Inner>,
    lease: LeaseConfig,
}

impl Coordinator {
    /// In-memory coordinator with the default lease configuration.
    pub fn in_memory() -> Self {
        Self::open(Box::new(MemoryStore::new()), LeaseConfig::default())
            .expect("memory store never fails to load")
    }

    /// Rebuilds state from `store`. Leases that were live when the store was
    /// written are restored with a fresh full lease duration.
    pub fn open(mut store: Box<dyn Store>, lease: LeaseConfig) -> Result<Self, CoordinatorError> {
        let recovered = store.load()?;
        let now = lease.clock.now();
        let fresh_expiry = now + lease.duration;
        let mut table = Table::default();
        for mut resource in recovered.snapshot {
            if let Some(l) = resource.lease.as_mut() {
                l.expires_at = fresh_expiry;
            }
            table.insert(resource);
        }
        let mut next_event_seq = recovered.snapshot_seq + 1;
        for logged in &recovered.events {
            table.apply(&logged.event, Some(fresh_expiry));
            next_event_seq = logged.seq + 1;
        }
        Ok(Self {
            inner: Mutex::new(Inner {
                table,
                store,
                next_event_seq,
            }),
            lease,
        })
    }

    pub fn lease_config(&self) -> &LeaseConfig {
        &self.lease
    }

    pub fn now(&self) -> Duration {
        self.lease.clock.now()
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().expect("coordinator lock poisoned")
    }

    pub fn add_resource(
        &self,
        kind: ResourceKind,
        payload: &str,
    ) -> Result<AddOutcome, CoordinatorError> {
        if payload.trim().is_empty() {
            return Err(CoordinatorError::Validation("payload must be non-empty".into()));
        }
        let mut inner = self.lock();
        if let Some(&idx) = inner.table.by_key.get(&(kind, payload.to_string())) {
            return Ok(AddOutcome {
                id: inner.table.resources[idx].id.clone(),
                created: false,
            });
        }
        let id = kind.make_id(inner.table.resources.len() as u64);
        let now = self.now();
        inner.record(
            now,
            Event::Added {
                id: id.clone(),
                kind,
                payload: payload.to_string(),
            },
        )?;
        inner.maybe_compact()?;
        Ok(AddOutcome { id, created: true })
    }

    /// Leases the oldest `NotStarted` resource of `kind` to `worker_id`.
    /// Expired leases are reclaimed first, so a crashed worker's resources
    /// become available again without a separate reaper.
    pub fn acquire_next(
        &self,
        kind: ResourceKind,
        worker_id: &str,
    ) -> Result<Option<Resource>, CoordinatorError> {
        if worker_id.trim().is_empty() {
            return Err(CoordinatorError::Validation("worker_id must be non-empty".into()));
        }
        let mut inner = self.lock();
        let now = self.now();
        inner.release_expired(now)?;
        let Some(&seq) = inner.table.pending[kind.index()].first() else {
            inner.maybe_compact()?;
            return Ok(None);
        };
        let id = inner.table.resources[seq as usize].id.clone();
        let expires_at = now + self.lease.duration;
        inner.record(
            now,
            Event::Acquired {
                id,
                worker_id: worker_id.to_string(),
                expires_at_us: expires_at.as_micros() as u64,
            },
        )?;
        inner.maybe_compact()?;
        Ok(Some(inner.table.resources[seq as usize].clone()))
    }

    pub fn complete(
        &self,
        id: &ResourceId,
        worker_id: &str,
        result: Option<String>,
    ) -> Result<CompleteOutcome, CoordinatorError> {
        let mut inner = self.lock();
        let idx = inner
            .table
            .index_of(id)
            .ok_or_else(|| CoordinatorError::NotFound(id.clone()))?;
        let resource = &inner.table.resources[idx];
        let stale = || CoordinatorError::StaleLease {
            id: id.clone(),
            worker_id: worker_id.to_string(),
        };
        match resource.state {
            ResourceState::Done => {
                if resource.completed_by.as_deref() == Some(worker_id) {
                    Ok(CompleteOutcome::AlreadyDone)
                } else {
                    Err(stale())
                }
            }
            ResourceState::NotStarted => Err(CoordinatorError::InvalidState {
                id: id.clone(),
                state: ResourceState::NotStarted,
            }),
            ResourceState::InProgress => {
                let holder = resource.lease.as_ref().map(|l| l.worker_id.as_str());
                if holder != Some(worker_id) {
                    return Err(stale());
                }
                let now = self.now();
                inner.record(
                    now,
                    Event::Completed {
                        id: id.clone(),
                        worker_id: worker_id.to_string(),
                        result,
                    },
                )?;
                inner.maybe_compact()?;
                Ok(CompleteOutcome::Completed)
            }
        }
    }

    /// Returns every `InProgress` resource whose lease expired strictly
    /// before `now` to `NotStarted`.
    pub fn release_expired(&self, now: Duration) -> Result<usize, CoordinatorError> {
        let mut inner = self.lock();
        let n = inner.release_expired(now)?;
        inner.maybe_compact()?;
        Ok(n)
    }

    pub fn stats(&self) -> Stats {
        let inner = self.lock();
        let mut stats = Stats::default();
        for r in &inner.table.resources {
            stats.get_mut(r.kind).bump(r.state);
        }
        stats
    }

    pub fn get(&self, id: &ResourceId) -> Option<Resource> {
        let inner = self.lock();
        inner
            .table
            .index_of(id)
            .map(|idx| inner.table.resources[idx].clone())
    }

    /// All resources in insertion order.
    pub fn resources(&self) -> Vec<Resource> {
        self.lock().table.resources.clone()
    }

    /// Payloads of every resource of `kind`, in insertion order.
    pub fn payloads(&self, kind: ResourceKind) -> Vec<String> {
        self.lock()
            .table
            .resources
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.payload.clone())
            .collect()
    }

    /// Forces a snapshot of the current table into the store.
    pub fn compact(&self) -> Result<(), CoordinatorError> {
        let mut inner = self.lock();
        let last = inner.next_event_seq - 1;
        let Inner { table, store, .. } = &mut *inner;
        store.compact(&table.resources, last)?;
        Ok(())
    }
}
