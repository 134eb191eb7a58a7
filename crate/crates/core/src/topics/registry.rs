use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::grammar::{format_topic, EntityKind};
use crate::broker::{Broker, BrokerError};

/// Registration log, replayed on startup so ids survive restarts.
pub const REGISTRY_TOPIC: &str = "/system/registry";

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("validation: {0}")]
    Validation(&'static str),
    #[error(transparent)]
    Broker(#[from] BrokerError),
    #[error("corrupt registration log at offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub kind: EntityKind,
    pub id: u32,
    /// Marker payload for robots, category for objects, empty for HMDs.
    pub label: String,
    pub topics: Vec<String>,
}

#[derive(Default)]
struct State {
    next_id: BTreeMap<EntityKind, u32>,
    entities: BTreeMap<(EntityKind, u32), EntityRecord>,
    robot_by_label: HashMap<String, u32>,
}

impl State {
    fn insert(&mut self, record: EntityRecord) {
        let next = self.next_id.entry(record.kind).or_default();
        *next = (*next).max(record.id + 1);
        if record.kind == EntityKind::Robot {
            self.robot_by_label.insert(record.label.clone(), record.id);
        }
        self.entities.insert((record.kind, record.id), record);
    }
}

/// Assigns per-kind ids and owns creation of every entity topic.
///
/// Registrations are serialized through one writer lock; lookups only take
/// the shared read lock.
pub struct TopicRegistry {
    broker: Arc<Broker>,
    state: RwLock<State>,
    writer: Mutex<()>,
}

impl TopicRegistry {
    /// Opens the registry on `broker`, replaying earlier registrations.
    pub fn open(broker: Arc<Broker>) -> Result<TopicRegistry, RegistryError> {
        broker.create_topic(REGISTRY_TOPIC)?;
        let mut state = State::default();
        for record in broker.fetch(REGISTRY_TOPIC, 0, usize::MAX)? {
            let entity: EntityRecord = serde_json::from_slice(&record.payload).map_err(|e| {
                RegistryError::Corrupt { offset: record.offset, reason: e.to_string() }
            })?;
            for topic in &entity.topics {
                broker.create_topic(topic)?;
            }
            state.insert(entity);
        }
        Ok(TopicRegistry { broker, state: RwLock::new(state), writer: Mutex::new(()) })
    }

    pub fn broker(&self) -> &Arc<Broker> {
        &self.broker
    }

    fn register(&self, kind: EntityKind, label: &str) -> Result<EntityRecord, RegistryError> {
        let id = self.state.read().unwrap().next_id.get(&kind).copied().unwrap_or(0);
        let topics: Vec<String> =
            kind.channels().iter().map(|c| format_topic(kind, id, *c)).collect();
        for topic in &topics {
            self.broker.create_topic(topic)?;
        }
        let record = EntityRecord { kind, id, label: label.to_string(), topics };
        let payload = serde_json::to_vec(&record).expect("entity record serializes");
        self.broker.publish(REGISTRY_TOPIC, payload, 0)?;
        self.state.write().unwrap().insert(record.clone());
        Ok(record)
    }

    /// Registers the robot identified by a marker payload. Registering the
    /// same payload again returns the existing record.
    pub fn register_robot(&self, marker_label: &str) -> Result<EntityRecord, RegistryError> {
        if marker_label.is_empty() {
            return Err(RegistryError::Validation("marker label must be non-empty"));
        }
        let _w = self.writer.lock().unwrap();
        if let Some(existing) = self.robot_by_label(marker_label) {
            return Ok(existing);
        }
        self.register(EntityKind::Robot, marker_label)
    }

    pub fn register_hmd(&self) -> Result<EntityRecord, RegistryError> {
        let _w = self.writer.lock().unwrap();
        self.register(EntityKind::Hmd, "")
    }

    /// Every call yields a fresh id, even for a category already seen.
    pub fn register_object(&self, category: &str) -> Result<EntityRecord, RegistryError> {
        if category.is_empty() {
            return Err(RegistryError::Validation("object category must be non-empty"));
        }
        let _w = self.writer.lock().unwrap();
        self.register(EntityKind::Object, category)
    }

    pub fn get(&self, kind: EntityKind, id: u32) -> Option<EntityRecord> {
        self.state.read().unwrap().entities.get(&(kind, id)).cloned()
    }

    pub fn robot_by_label(&self, label: &str) -> Option<EntityRecord> {
        let state = self.state.read().unwrap();
        let id = *state.robot_by_label.get(label)?;
        state.entities.get(&(EntityKind::Robot, id)).cloned()
    }

    /// All entities ordered by kind, then id.
    pub fn entities(&self) -> Vec<EntityRecord> {
        self.state.read().unwrap().entities.values().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broker::BrokerConfig;
    use crate::topics::{parse_topic, TopicName};

    fn registry() -> TopicRegistry {
        TopicRegistry::open(Arc::new(Broker::in_memory(BrokerConfig::default()))).unwrap()
    }

    #[test]
    fn robots_get_sequential_ids_and_two_topics() {
        let r = registry();
        let a = r.register_robot("robot-A").unwrap();
        assert_eq!(a.id, 0);
        assert_eq!(a.topics, ["/robot/0/navigation_plan", "/robot/0/joint_trajectory"]);
        let b = r.register_robot("robot-B").unwrap();
        assert_eq!(b.id, 1);
    }

    #[test]
    fn robot_registration_is_idempotent_per_marker() {
        let r = registry();
        let a = r.register_robot("robot-A").unwrap();
        let again = r.register_robot("robot-A").unwrap();
        assert_eq!(a, again);
        assert_eq!(r.entities().len(), 1);
        let robot_topics = r
            .broker()
            .topic_names()
            .into_iter()
            .filter(|t| t.starts_with("/robot/"))
            .count();
        assert_eq!(robot_topics, 2);
    }

    #[test]
    fn hmds_count_up_independently_of_robots() {
        let r = registry();
        r.register_robot("robot-A").unwrap();
        let ids: Vec<_> = (0..3).map(|_| r.register_hmd().unwrap().id).collect();
        assert_eq!(ids, [0, 1, 2]);
        assert_eq!(r.get(EntityKind::Hmd, 0).unwrap().topics, ["/hmd/0/pose"]);
        assert!(r.broker().fetch("/hmd/0/pose", 0, 10).unwrap().is_empty());
    }

    #[test]
    fn objects_are_per_instance() {
        let r = registry();
        let a = r.register_object("screwdriver").unwrap();
        assert_eq!(a.topics, ["/object/0/state"]);
        let b = r.register_object("screwdriver").unwrap();
        assert_eq!(b.id, 1);
        assert!(matches!(r.register_object(""), Err(RegistryError::Validation(_))));
        assert!(matches!(r.register_robot(""), Err(RegistryError::Validation(_))));
    }

    #[test]
    fn ids_survive_reopen_on_same_broker() {
        let broker = Arc::new(Broker::in_memory(BrokerConfig::default()));
        {
            let r = TopicRegistry::open(broker.clone()).unwrap();
            r.register_robot("robot-A").unwrap();
            r.register_hmd().unwrap();
        }
        let r = TopicRegistry::open(broker).unwrap();
        assert_eq!(r.register_robot("robot-A").unwrap().id, 0);
        assert_eq!(r.register_robot("robot-B").unwrap().id, 1);
        assert_eq!(r.register_hmd().unwrap().id, 1);
    }

    #[test]
    fn every_entity_topic_parses_and_is_owned_by_an_entity() {
        let r = registry();
        r.register_robot("a").unwrap();
        r.register_object("hammer").unwrap();
        r.register_hmd().unwrap();
        let owned: Vec<String> = r.entities().into_iter().flat_map(|e| e.topics).collect();
        for t in r.broker().topic_names() {
            match TopicName::parse(&t).unwrap() {
                TopicName::Entity(_) => assert!(owned.contains(&t)),
                TopicName::System(_) => {}
            }
        }
        for t in &owned {
            parse_topic(t).unwrap();
        }
    }
}
