//! The `/{kind}/{id}/{channel}` topic scheme and automatic id assignment.

mod grammar;
mod registry;

pub use grammar::{
    format_topic, parse_topic, Channel, EntityKind, EntityTopic, ParseError, TopicName,
    SYSTEM_PREFIX,
};
pub use registry::{EntityRecord, RegistryError, TopicRegistry, REGISTRY_TOPIC};
