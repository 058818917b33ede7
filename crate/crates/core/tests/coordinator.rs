use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use proptest::prelude::*;
use speechcrawl::coordinator::http::{spawn_server, HttpCoordinatorClient};
use speechcrawl::coordinator::{
    ClientError, Coordinator, CoordinatorClient, CoordinatorError, JournalStore, LeaseConfig, ManualClock,
    MemoryStore, ResourceId, ResourceKind, ResourceState,
};

fn manual(lease_s: u64) -> (Arc<ManualClock>, Coordinator) {
    let clock = Arc::new(ManualClock::new());
    let cfg = LeaseConfig::new(Duration::from_secs(lease_s))
        .unwrap()
        .with_clock(clock.clone());
    let c = Coordinator::open(Box::new(MemoryStore::new()), cfg).unwrap();
    (clock, c)
}

#[derive(Debug, Clone)]
enum Op {
    Add(u8),
    Acquire(u8),
    Complete(u8, u8),
    Advance(u16),
    Reap,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..12).prop_map(Op::Add),
        (0u8..3).prop_map(Op::Acquire),
        (0u8..12, 0u8..3).prop_map(|(r, w)| Op::Complete(r, w)),
        (0u16..400).prop_map(Op::Advance),
        Just(Op::Reap),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn counts_are_conserved_and_leases_match_state(ops in prop::collection::vec(op(), 1..80)) {
        let (clock, c) = manual(100);
        let mut ids: Vec<ResourceId> = Vec::new();
        let mut total = 0u64;
        for op in ops {
            match op {
                Op::Add(p) => {
                    let out = c.add_resource(ResourceKind::Video, &format!("p{p}")).unwrap();
                    if out.created {
                        total += 1;
                        ids.push(out.id);
                    }
                }
                Op::Acquire(w) => {
                    c.acquire_next(ResourceKind::Video, &format!("w{w}")).unwrap();
                }
                Op::Complete(r, w) => {
                    if let Some(id) = ids.get(r as usize) {
                        let _ = c.complete(id, &format!("w{w}"), None);
                    }
                }
                Op::Advance(s) => clock.advance(Duration::from_secs(s as u64)),
                Op::Reap => {
                    c.release_expired(c.now()).unwrap();
                }
            }
            prop_assert_eq!(c.stats().get(ResourceKind::Video).total(), total);
            for r in c.resources() {
                prop_assert_eq!(r.state == ResourceState::InProgress, r.lease.is_some());
                prop_assert_eq!(r.state == ResourceState::Done, r.completed_by.is_some());
            }
        }
    }

    #[test]
    fn second_complete_changes_nothing(n in 1usize..6, pick in 0usize..6) {
        let (_, c) = manual(300);
        for i in 0..n {
            c.add_resource(ResourceKind::Keyword, &format!("k{i}")).unwrap();
        }
        let mut held = Vec::new();
        while let Some(r) = c.acquire_next(ResourceKind::Keyword, "w").unwrap() {
            held.push(r.id);
        }
        let id = &held[pick % held.len()];
        c.complete(id, "w", Some("once".into())).unwrap();
        let before = (c.resources(), c.stats());
        c.complete(id, "w", Some("twice".into())).unwrap();
        prop_assert_eq!(before, (c.resources(), c.stats()));
    }
}

#[test]
fn crashed_worker_resources_finish_after_expiry() {
    let (clock, c) = manual(60);
    for i in 0..20 {
        c.add_resource(ResourceKind::Channel, &format!("UC{i}")).unwrap();
    }
    // The first worker takes five leases and disappears.
    let abandoned: Vec<ResourceId> = (0..5)
        .map(|_| c.acquire_next(ResourceKind::Channel, "crashed").unwrap().unwrap().id)
        .collect();
    let mut done = 0;
    let mut rounds = 0;
    while done < 20 {
        match c.acquire_next(ResourceKind::Channel, "survivor").unwrap() {
            Some(r) => {
                c.complete(&r.id, "survivor", None).unwrap();
                done += 1;
            }
            None => clock.advance(Duration::from_secs(61)),
        }
        rounds += 1;
        assert!(rounds < 100);
    }
    assert_eq!(c.stats().get(ResourceKind::Channel).done, 20);
    for id in &abandoned {
        assert!(matches!(
            c.complete(id, "crashed", None),
            Err(CoordinatorError::StaleLease { .. })
        ));
    }
}

#[test]
fn journal_survives_restart_and_compaction() {
    let dir = tempfile::tempdir().unwrap();
    let ids: Vec<ResourceId>;
    {
        let c = Coordinator::open(
            Box::new(JournalStore::open(dir.path()).unwrap()),
            LeaseConfig::default(),
        )
        .unwrap();
        ids = (0..6)
            .map(|i| c.add_resource(ResourceKind::Keyword, &format!("kw{i}")).unwrap().id)
            .collect();
        let a = c.acquire_next(ResourceKind::Keyword, "w1").unwrap().unwrap();
        c.complete(&a.id, "w1", Some("videos=3".into())).unwrap();
        c.acquire_next(ResourceKind::Keyword, "w2").unwrap().unwrap();
        c.compact().unwrap();
        c.add_resource(ResourceKind::Video, "vid").unwrap();
    }
    let c = Coordinator::open(
        Box::new(JournalStore::open(dir.path()).unwrap()),
        LeaseConfig::default(),
    )
    .unwrap();
    let kw = c.stats().get(ResourceKind::Keyword);
    assert_eq!((kw.done, kw.in_progress, kw.not_started), (1, 1, 4));
    assert_eq!(c.stats().get(ResourceKind::Video).total(), 1);
    let first = c.get(&ids[0]).unwrap();
    assert_eq!(first.result.as_deref(), Some("videos=3"));
    assert_eq!(first.completed_by.as_deref(), Some("w1"));
    // Dedup still applies after recovery.
    assert!(!c.add_resource(ResourceKind::Keyword, "kw3").unwrap().created);
    // The recovered lease still belongs to its worker.
    c.complete(&ids[1], "w2", None).unwrap();
    let next = c.acquire_next(ResourceKind::Keyword, "w3").unwrap().unwrap();
    assert_eq!(next.id, ids[2]);
}

#[test]
fn http_errors_map_to_client_errors() {
    let coord = Arc::new(Coordinator::in_memory());
    let server = spawn_server(coord, "127.0.0.1:0".parse().unwrap(), Duration::from_secs(1)).unwrap();
    let client = HttpCoordinatorClient::new(&server.url()).unwrap();

    let added = client.add_resource(ResourceKind::Video, "abc").unwrap();
    assert!(added.created);
    assert!(!client.add_resource(ResourceKind::Video, "abc").unwrap().created);
    assert!(matches!(
        client.add_resource(ResourceKind::Video, ""),
        Err(ClientError::Validation(_))
    ));
    assert!(matches!(
        client.complete(&added.id, "w", None),
        Err(ClientError::InvalidState(_))
    ));
    assert!(matches!(
        client.complete(&ResourceId("nope".into()), "w", None),
        Err(ClientError::NotFound(_))
    ));
    let r = client.acquire_next(ResourceKind::Video, "w").unwrap().unwrap();
    assert_eq!(r.payload, "abc");
    assert!(matches!(
        client.complete(&r.id, "other", None),
        Err(ClientError::StaleLease(_))
    ));
    client.complete(&r.id, "w", Some("ok".into())).unwrap();
    assert_eq!(
        client.complete(&r.id, "w", None).unwrap(),
        speechcrawl::coordinator::CompleteOutcome::AlreadyDone
    );
    assert!(client.acquire_next(ResourceKind::Video, "w").unwrap().is_none());
    assert_eq!(client.stats().unwrap().get(ResourceKind::Video).done, 1);
    server.stop().unwrap();

    assert!(matches!(
        HttpCoordinatorClient::new(&server_gone_url()).unwrap().stats(),
        Err(ClientError::Transport(_))
    ));
}

fn server_gone_url() -> String {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

#[test]
fn concurrent_http_workers_share_without_overlap() {
    let coord = Arc::new(Coordinator::in_memory());
    for i in 0..200 {
        Coordinator::add_resource(&coord, ResourceKind::Keyword, &format!("k{i}")).unwrap();
    }
    let server =
        spawn_server(coord.clone(), "127.0.0.1:0".parse().unwrap(), Duration::from_millis(50)).unwrap();
    let url = server.url();
    let seen: Vec<Vec<String>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..6)
            .map(|w| {
                let url = url.clone();
                s.spawn(move || {
                    let client = HttpCoordinatorClient::new(&url).unwrap();
                    let worker = format!("w{w}");
                    let mut got = Vec::new();
                    while let Some(r) = client.acquire_next(ResourceKind::Keyword, &worker).unwrap() {
                        client.complete(&r.id, &worker, None).unwrap();
                        got.push(r.payload);
                    }
                    got
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let all: Vec<&String> = seen.iter().flatten().collect();
    let unique: BTreeSet<&String> = all.iter().copied().collect();
    assert_eq!(all.len(), 200);
    assert_eq!(unique.len(), 200);
    assert_eq!(Coordinator::stats(&coord).get(ResourceKind::Keyword).done, 200);
    server.stop().unwrap();
}
