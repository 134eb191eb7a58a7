use std::sync::Arc;
use std::thread;

use super::*;

const POSE: &str = "/hmd/0/pose";

fn broker() -> Broker {
    Broker::in_memory(BrokerConfig { replicas: 2 })
}

#[test]
fn create_topic_is_idempotent() {
    let b = broker();
    let h1 = b.create_topic(POSE).unwrap();
    assert_eq!(h1.len(), 0);
    b.publish(POSE, &b"x"[..], 1).unwrap();
    let h2 = b.create_topic(POSE).unwrap();
    assert!(h1.same_log(&h2));
    assert_eq!(h2.len(), 1);
}

#[test]
fn create_topic_checks_grammar() {
    assert!(matches!(broker().create_topic("robot/pose"), Err(BrokerError::Name(_))));
}

#[test]
fn sequential_offsets() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    for i in 0..100u64 {
        assert_eq!(b.publish(POSE, vec![i as u8], i).unwrap(), i);
    }
    let all = b.fetch(POSE, 0, usize::MAX).unwrap();
    assert_eq!(all.iter().map(|r| r.offset).collect::<Vec<_>>(), (0..100).collect::<Vec<_>>());
}

#[test]
fn unknown_topic() {
    let b = broker();
    assert!(matches!(b.publish("/hmd/1/pose", &b""[..], 0), Err(BrokerError::TopicNotFound(_))));
    assert!(matches!(b.fetch("/hmd/1/pose", 0, 1), Err(BrokerError::TopicNotFound(_))));
    assert!(matches!(b.subscribe_signal("/hmd/1/pose", 0), Err(BrokerError::TopicNotFound(_))));
}

#[test]
fn fetch_window_and_tail() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    for i in 0..5u64 {
        b.publish(POSE, format!("m{i}"), i).unwrap();
    }
    assert_eq!(b.fetch(POSE, 0, usize::MAX).unwrap().len(), 5);
    assert!(b.fetch(POSE, 5, 10).unwrap().is_empty());
    assert!(b.fetch(POSE, 50, 10).unwrap().is_empty());
    let mid = b.fetch(POSE, 1, 2).unwrap();
    assert_eq!(mid.iter().map(|r| r.offset).collect::<Vec<_>>(), [1, 2]);
}

#[test]
fn independent_readers_agree() {
    let b = Arc::new(broker());
    b.create_topic(POSE).unwrap();
    for i in 0..8u64 {
        b.publish(POSE, format!("m{i}"), i).unwrap();
    }
    let mut a = Consumer::resume(b.clone(), "a", POSE).unwrap();
    let mut c = Consumer::resume(b.clone(), "c", POSE).unwrap();
    c.seek(3);
    let ra = a.poll(usize::MAX).unwrap();
    let rc = c.poll(usize::MAX).unwrap();
    assert_eq!(ra.len(), 8);
    assert_eq!(rc.len(), 5);
    assert_eq!(&ra[3..], &rc[..]);
    a.commit().unwrap();
    assert_eq!(b.committed("c", POSE), None);
}

#[test]
fn commit_then_restart_resumes() {
    let b = Arc::new(broker());
    b.create_topic(POSE).unwrap();
    for i in 0..6u64 {
        b.publish(POSE, format!("m{i}"), i).unwrap();
    }
    let mut c = Consumer::resume(b.clone(), "viewer", POSE).unwrap();
    c.poll(3).unwrap();
    c.commit().unwrap();
    drop(c);
    let mut c = Consumer::resume(b.clone(), "viewer", POSE).unwrap();
    assert_eq!(c.poll(1).unwrap()[0].offset, 3);
}

#[test]
fn commit_bounds() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    b.commit("x", POSE, 0).unwrap();
    b.publish(POSE, &b"a"[..], 0).unwrap();
    b.commit("x", POSE, 1).unwrap();
    assert!(matches!(
        b.commit("x", POSE, 2),
        Err(BrokerError::OffsetOutOfRange { offset: 2, length: 1, .. })
    ));
}

#[test]
fn replica_failure_loses_nothing() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    for i in 0..10u64 {
        b.publish(POSE, format!("m{i}"), i).unwrap();
    }
    let before = b.fetch(POSE, 0, usize::MAX).unwrap();
    b.fail_replica(POSE, 0).unwrap();
    assert_eq!(b.fetch(POSE, 0, usize::MAX).unwrap(), before);
    assert_eq!(b.publish(POSE, &b"after"[..], 10).unwrap(), 10);
    let snaps = b.replica_snapshots(POSE).unwrap();
    assert!(snaps[0].is_none());
    assert_eq!(snaps[1].as_ref().unwrap().len(), 11);
    b.recover_replica(POSE, 0).unwrap();
    let snaps = b.replica_snapshots(POSE).unwrap();
    assert_eq!(snaps[0], snaps[1]);
    b.fail_replica(POSE, 0).unwrap();
    b.fail_replica(POSE, 1).unwrap();
    assert!(matches!(b.publish(POSE, &b"lost"[..], 11), Err(BrokerError::NoLiveReplica(_))));
}

#[test]
fn stamps_never_regress() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    b.publish(POSE, &b"a"[..], 100).unwrap();
    b.publish(POSE, &b"b"[..], 50).unwrap();
    let r = b.fetch(POSE, 0, 2).unwrap();
    assert_eq!(r[1].publish_stamp, 100);
}

#[test]
fn signal_fires_once_per_batch() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    let mut sig = b.subscribe_signal(POSE, 0).unwrap();
    assert!(!sig.try_wake());
    b.publish(POSE, &b"a"[..], 0).unwrap();
    assert!(sig.try_wake());
    assert!(!sig.try_wake());
    let got = b.fetch(POSE, sig.position(), usize::MAX).unwrap();
    sig.acknowledge(got.last().unwrap().offset + 1);
    assert!(!sig.is_ready());
}

#[test]
fn burst_coalesces_but_fetch_is_complete() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    let mut sig = b.subscribe_signal(POSE, 0).unwrap();
    for i in 0..10u64 {
        b.publish(POSE, vec![i as u8], i).unwrap();
    }
    let mut wakes = 0;
    while sig.try_wake() {
        wakes += 1;
    }
    assert!(wakes >= 1);
    assert_eq!(b.fetch(POSE, 0, usize::MAX).unwrap().len(), 10);
}

#[tokio::test]
async fn async_ready_times_out_without_publish() {
    let b = broker();
    b.create_topic(POSE).unwrap();
    let mut sig = b.subscribe_signal(POSE, 0).unwrap();
    let r = tokio::time::timeout(std::time::Duration::from_millis(50), sig.ready()).await;
    assert!(r.is_err());
}

#[tokio::test]
async fn async_ready_wakes_on_publish() {
    let b = Arc::new(broker());
    b.create_topic(POSE).unwrap();
    let mut sig = b.subscribe_signal(POSE, 0).unwrap();
    let b2 = b.clone();
    let t = tokio::spawn(async move {
        tokio::time::sleep(std::time::Duration::from_millis(10)).await;
        b2.publish(POSE, &b"x"[..], 0).unwrap();
    });
    tokio::time::timeout(std::time::Duration::from_secs(2), sig.ready()).await.unwrap();
    t.await.unwrap();
}

#[test]
fn concurrent_publishers_keep_offsets_contiguous() {
    let b = Arc::new(broker());
    b.create_topic(POSE).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|t| {
            let b = b.clone();
            thread::spawn(move || {
                for i in 0..250u64 {
                    b.publish(POSE, format!("{t}:{i}"), 0).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let all = b.fetch(POSE, 0, usize::MAX).unwrap();
    assert_eq!(all.len(), 1000);
    assert!(all.iter().enumerate().all(|(i, r)| r.offset == i as u64));
    let snaps = b.replica_snapshots(POSE).unwrap();
    assert_eq!(snaps[0], snaps[1]);
}

#[test]
fn persistent_broker_reloads_logs_and_cursors() {
    let dir = tempfile::tempdir().unwrap();
    {
        let b = Broker::open(dir.path(), BrokerConfig::default()).unwrap();
        b.create_topic(POSE).unwrap();
        b.create_topic("/system/intent_events").unwrap();
        for i in 0..5u64 {
            b.publish(POSE, format!("m{i}"), i * 10).unwrap();
        }
        b.commit("viewer", POSE, 3).unwrap();
    }
    let b = Arc::new(Broker::open(dir.path(), BrokerConfig::default()).unwrap());
    assert_eq!(b.topic_names(), ["/hmd/0/pose", "/system/intent_events"]);
    let recs = b.fetch(POSE, 0, usize::MAX).unwrap();
    assert_eq!(recs.len(), 5);
    assert_eq!(recs[4].payload, Bytes::from("m4"));
    assert_eq!(recs[4].publish_stamp, 40);
    let mut c = Consumer::resume(b.clone(), "viewer", POSE).unwrap();
    assert_eq!(c.poll(10).unwrap()[0].offset, 3);
    assert_eq!(b.publish(POSE, &b"m5"[..], 0).unwrap(), 5);
    assert_eq!(b.fetch(POSE, 5, 1).unwrap()[0].publish_stamp, 40);
}
