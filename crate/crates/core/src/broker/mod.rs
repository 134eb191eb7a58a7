//! Embedded append-only log broker with pull-based consumption.
//!
//! Every topic is an ordered log whose records get contiguous offsets from
//! zero. The broker never pushes data: consumers call [`Broker::fetch`] with
//! the offset they want and keep their own position, optionally committing it
//! with [`Broker::commit`] so a restarted consumer resumes where it stopped.
//!
//! Replication is modelled as `replicas` in-memory copies of every log that
//! are written before `publish` returns. A copy can be knocked out with
//! [`Broker::fail_replica`]; reads are then served by a surviving copy.

mod signal;
mod store;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use bytes::Bytes;
use tokio::sync::watch;

pub use signal::ReadinessSignal;
use store::Store;

use crate::message::Nanos;
use crate::topics::{ParseError, TopicName};

#[derive(Debug, thiserror::Error)]
pub enum BrokerError {
    #[error(transparent)]
    Name(#[from] ParseError),
    #[error("topic not found: {0}")]
    TopicNotFound(String),
    #[error("offset {offset} out of range for {topic} (length {length})")]
    OffsetOutOfRange { topic: String, offset: u64, length: u64 },
    #[error("no live replica for {0}")]
    NoLiveReplica(String),
    #[error("replica {index} does not exist for {topic}")]
    NoSuchReplica { topic: String, index: usize },
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BrokerError> = std::result::Result<T, E>;

/// One published message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub topic: String,
    pub offset: u64,
    pub publish_stamp: Nanos,
    pub payload: Bytes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrokerConfig {
    pub replicas: usize,
}

impl Default for BrokerConfig {
    fn default() -> Self {
        Self { replicas: 2 }
    }
}

#[derive(Debug, Default)]
struct Replica {
    alive: bool,
    records: Vec<Record>,
}

#[derive(Debug)]
struct TopicLog {
    name: String,
    replicas: Vec<RwLock<Replica>>,
    writer: Mutex<WriterState>,
    length: watch::Sender<u64>,
}

#[derive(Debug, Default)]
struct WriterState {
    length: u64,
    last_stamp: Nanos,
}

/// Shared handle to a topic log. Handles for the same name compare equal.
#[derive(Debug, Clone)]
pub struct TopicHandle(Arc<TopicLog>);

impl TopicHandle {
    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn len(&self) -> u64 {
        *self.0.length.borrow()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_log(&self, other: &TopicHandle) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl TopicLog {
    fn new(name: &str, replicas: usize, records: Vec<Record>) -> TopicLog {
        let length = records.len() as u64;
        let last_stamp = records.last().map_or(0, |r| r.publish_stamp);
        TopicLog {
            name: name.to_string(),
            replicas: (0..replicas.max(1))
                .map(|_| RwLock::new(Replica { alive: true, records: records.clone() }))
                .collect(),
            writer: Mutex::new(WriterState { length, last_stamp }),
            length: watch::channel(length).0,
        }
    }

    fn read<T>(&self, f: impl FnOnce(&[Record]) -> T) -> Result<T> {
        for replica in &self.replicas {
            let r = replica.read().unwrap();
            if r.alive {
                return Ok(f(&r.records));
            }
        }
        Err(BrokerError::NoLiveReplica(self.name.clone()))
    }
}

/// The broker. Cheap to share behind an `Arc`; every method takes `&self`.
pub struct Broker {
    config: BrokerConfig,
    topics: RwLock<HashMap<String, TopicHandle>>,
    // consumer id -> topic -> committed offset
    cursors: Mutex<BTreeMap<String, BTreeMap<String, u64>>>,
    store: Option<Store>,
}

impl Default for Broker {
    fn default() -> Self {
        Self::in_memory(BrokerConfig::default())
    }
}

impl Broker {
    pub fn in_memory(config: BrokerConfig) -> Broker {
        Broker {
            config,
            topics: RwLock::new(HashMap::new()),
            cursors: Mutex::new(BTreeMap::new()),
            store: None,
        }
    }

    /// Opens (or creates) a broker persisted under `dir`, reloading any
    /// topics and committed offsets already there.
    pub fn open(dir: &Path, config: BrokerConfig) -> Result<Broker> {
        let store = Store::open(dir)?;
        let mut topics = HashMap::new();
        for loaded in store.load_topics()? {
            let log = TopicLog::new(&loaded.name, config.replicas, loaded.records);
            topics.insert(loaded.name, TopicHandle(Arc::new(log)));
        }
        let cursors = store.load_cursors()?;
        Ok(Broker {
            config,
            topics: RwLock::new(topics),
            cursors: Mutex::new(cursors),
            store: Some(store),
        })
    }

    pub fn config(&self) -> BrokerConfig {
        self.config
    }

    /// Creates a topic, or returns the existing one with the same name.
    pub fn create_topic(&self, name: &str) -> Result<TopicHandle> {
        TopicName::parse(name)?;
        if let Some(h) = self.topics.read().unwrap().get(name) {
            return Ok(h.clone());
        }
        let mut topics = self.topics.write().unwrap();
        if let Some(h) = topics.get(name) {
            return Ok(h.clone());
        }
        if let Some(store) = &self.store {
            store.create_topic(name)?;
        }
        let handle = TopicHandle(Arc::new(TopicLog::new(name, self.config.replicas, Vec::new())));
        topics.insert(name.to_string(), handle.clone());
        Ok(handle)
    }

    pub fn topic(&self, name: &str) -> Result<TopicHandle> {
        self.topics
            .read()
            .unwrap()
            .get(name)
            .cloned()
            .ok_or_else(|| BrokerError::TopicNotFound(name.to_string()))
    }

    /// All topic names, sorted.
    pub fn topic_names(&self) -> Vec<String> {
        let mut names: Vec<_> = self.topics.read().unwrap().keys().cloned().collect();
        names.sort();
        names
    }

    pub fn len(&self, topic: &str) -> Result<u64> {
        Ok(self.topic(topic)?.len())
    }

    /// Appends a record and returns its offset. Publish stamps never go
    /// backwards within a topic: an older stamp is raised to the last one.
    pub fn publish(&self, topic: &str, payload: impl Into<Bytes>, stamp: Nanos) -> Result<u64> {
        let handle = self.topic(topic)?;
        let log = &handle.0;
        let mut w = log.writer.lock().unwrap();
        let record = Record {
            topic: log.name.clone(),
            offset: w.length,
            publish_stamp: stamp.max(w.last_stamp),
            payload: payload.into(),
        };
        if !log.replicas.iter().any(|r| r.read().unwrap().alive) {
            return Err(BrokerError::NoLiveReplica(log.name.clone()));
        }
        if let Some(store) = &self.store {
            store.append(&record)?;
        }
        for replica in &log.replicas {
            let mut r = replica.write().unwrap();
            if r.alive {
                r.records.push(record.clone());
            }
        }
        w.length += 1;
        w.last_stamp = record.publish_stamp;
        log.length.send_replace(w.length);
        Ok(record.offset)
    }

    /// Returns up to `max_records` records starting at `from_offset`. Never
    /// blocks on data; an offset at or past the end yields an empty list.
    pub fn fetch(&self, topic: &str, from_offset: u64, max_records: usize) -> Result<Vec<Record>> {
        let handle = self.topic(topic)?;
        handle.0.read(|records| {
            let start = (from_offset.min(records.len() as u64)) as usize;
            let end = start.saturating_add(max_records).min(records.len());
            records[start..end].to_vec()
        })
    }

    /// Persists `offset` as the next position `consumer_id` will read.
    pub fn commit(&self, consumer_id: &str, topic: &str, offset: u64) -> Result<()> {
        let length = self.topic(topic)?.len();
        if offset > length {
            return Err(BrokerError::OffsetOutOfRange { topic: topic.to_string(), offset, length });
        }
        let mut cursors = self.cursors.lock().unwrap();
        cursors.entry(consumer_id.to_string()).or_default().insert(topic.to_string(), offset);
        if let Some(store) = &self.store {
            store.save_cursors(&cursors)?;
        }
        Ok(())
    }

    pub fn committed(&self, consumer_id: &str, topic: &str) -> Option<u64> {
        self.cursors.lock().unwrap().get(consumer_id)?.get(topic).copied()
    }

    /// A wake-up hint that fires once the topic grows past `position`.
    pub fn subscribe_signal(&self, topic: &str, position: u64) -> Result<ReadinessSignal> {
        let handle = self.topic(topic)?;
        Ok(ReadinessSignal::new(handle.0.length.subscribe(), position))
    }

    /// Drops the contents of one replica and marks it down.
    pub fn fail_replica(&self, topic: &str, index: usize) -> Result<()> {
        let handle = self.topic(topic)?;
        let replica = handle.0.replicas.get(index).ok_or_else(|| BrokerError::NoSuchReplica {
            topic: topic.to_string(),
            index,
        })?;
        let _w = handle.0.writer.lock().unwrap();
        let mut r = replica.write().unwrap();
        r.alive = false;
        r.records = Vec::new();
        Ok(())
    }

    /// Re-seeds a failed replica from a surviving one.
    pub fn recover_replica(&self, topic: &str, index: usize) -> Result<()> {
        let handle = self.topic(topic)?;
        let log = &handle.0;
        if index >= log.replicas.len() {
            return Err(BrokerError::NoSuchReplica { topic: topic.to_string(), index });
        }
        let _w = log.writer.lock().unwrap();
        let snapshot = log.read(|records| records.to_vec())?;
        let mut r = log.replicas[index].write().unwrap();
        r.records = snapshot;
        r.alive = true;
        Ok(())
    }

    /// Contents of every replica of a topic (`None` for a failed one).
    pub fn replica_snapshots(&self, topic: &str) -> Result<Vec<Option<Vec<Record>>>> {
        let handle = self.topic(topic)?;
        Ok(handle
            .0
            .replicas
            .iter()
            .map(|r| {
                let r = r.read().unwrap();
                r.alive.then(|| r.records.clone())
            })
            .collect())
    }
}

/// The publish/fetch/commit contract shared by the embedded broker and any
/// external log service (for example a Kafka connector) put in its place.
pub trait LogTransport: Send + Sync {
    fn create_topic(&self, name: &str) -> Result<()>;
    fn publish(&self, topic: &str, payload: Bytes, stamp: Nanos) -> Result<u64>;
    fn fetch(&self, topic: &str, from_offset: u64, max_records: usize) -> Result<Vec<Record>>;
    fn commit(&self, consumer_id: &str, topic: &str, offset: u64) -> Result<()>;
    fn committed(&self, consumer_id: &str, topic: &str) -> Option<u64>;
}

impl LogTransport for Broker {
    fn create_topic(&self, name: &str) -> Result<()> {
        Broker::create_topic(self, name).map(|_| ())
    }
    fn publish(&self, topic: &str, payload: Bytes, stamp: Nanos) -> Result<u64> {
        Broker::publish(self, topic, payload, stamp)
    }
    fn fetch(&self, topic: &str, from_offset: u64, max_records: usize) -> Result<Vec<Record>> {
        Broker::fetch(self, topic, from_offset, max_records)
    }
    fn commit(&self, consumer_id: &str, topic: &str, offset: u64) -> Result<()> {
        Broker::commit(self, consumer_id, topic, offset)
    }
    fn committed(&self, consumer_id: &str, topic: &str) -> Option<u64> {
        Broker::committed(self, consumer_id, topic)
    }
}

/// A named reader that tracks its own position on one topic.
pub struct Consumer {
    broker: Arc<Broker>,
    id: String,
    topic: String,
    position: u64,
}

impl Consumer {
    /// Starts at the consumer's committed offset, or at zero.
    pub fn resume(broker: Arc<Broker>, id: &str, topic: &str) -> Result<Consumer> {
        broker.topic(topic)?;
        let position = broker.committed(id, topic).unwrap_or(0);
        Ok(Consumer { broker, id: id.to_string(), topic: topic.to_string(), position })
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn seek(&mut self, offset: u64) {
        self.position = offset;
    }

    pub fn poll(&mut self, max_records: usize) -> Result<Vec<Record>> {
        let records = self.broker.fetch(&self.topic, self.position, max_records)?;
        if let Some(last) = records.last() {
            self.position = last.offset + 1;
        }
        Ok(records)
    }

    pub fn commit(&self) -> Result<()> {
        self.broker.commit(&self.id, &self.topic, self.position)
    }

    pub fn signal(&self) -> Result<ReadinessSignal> {
        self.broker.subscribe_signal(&self.topic, self.position)
    }
}

#[cfg(test)]
mod tests;
