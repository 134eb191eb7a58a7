use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::message::MessageKind;

/// Prefix reserved for infrastructure topics such as the intent event stream.
pub const SYSTEM_PREFIX: &str = "/system/";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Robot,
    Hmd,
    Object,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Robot, EntityKind::Hmd, EntityKind::Object];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Robot => "robot",
            EntityKind::Hmd => "hmd",
            EntityKind::Object => "object",
        }
    }

    pub fn channels(self) -> &'static [Channel] {
        match self {
            EntityKind::Robot => &[Channel::NavigationPlan, Channel::JointTrajectory],
            EntityKind::Hmd => &[Channel::Pose],
            EntityKind::Object => &[Channel::State],
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Pose,
    NavigationPlan,
    JointTrajectory,
    State,
}

impl Channel {
    pub const ALL: [Channel; 4] =
        [Channel::Pose, Channel::NavigationPlan, Channel::JointTrajectory, Channel::State];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Pose => "pose",
            Channel::NavigationPlan => "navigation_plan",
            Channel::JointTrajectory => "joint_trajectory",
            Channel::State => "state",
        }
    }

    pub fn message_kind(self) -> MessageKind {
        match self {
            Channel::Pose => MessageKind::PoseStamped,
            Channel::NavigationPlan => MessageKind::Path,
            Channel::JointTrajectory => MessageKind::JointTrajectory,
            Channel::State => MessageKind::ObjectState,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parsed `/{kind}/{id}/{channel}` topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityTopic {
    pub kind: EntityKind,
    pub id: u32,
    pub channel: Channel,
}

impl EntityTopic {
    pub fn new(kind: EntityKind, id: u32, channel: Channel) -> Self {
        Self { kind, id, channel }
    }
}

impl fmt::Display for EntityTopic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/{}/{}/{}", self.kind, self.id, self.channel)
    }
}

impl FromStr for EntityTopic {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_topic(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid topic {input:?} at byte {position}: expected {expected}")]
pub struct ParseError {
    pub input: String,
    pub position: usize,
    pub expected: &'static str,
}

/// Any name the broker accepts: an entity topic or a `/system/` topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopicName {
    Entity(EntityTopic),
    System(String),
}

impl TopicName {
    pub fn parse(s: &str) -> Result<TopicName, ParseError> {
        if let Some(rest) = s.strip_prefix(SYSTEM_PREFIX) {
            let ok = !rest.is_empty()
                && rest.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_');
            return if ok {
                Ok(TopicName::System(rest.to_string()))
            } else {
                let position = SYSTEM_PREFIX.len()
                    + rest
                        .bytes()
                        .position(|b| !(b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'))
                        .unwrap_or(0);
                Err(ParseError { input: s.into(), position, expected: "system channel [a-z0-9_]+" })
            };
        }
        parse_topic(s).map(TopicName::Entity)
    }
}

fn segment<'a>(s: &'a str, pos: &mut usize) -> &'a str {
    let rest = &s[*pos..];
    let end = rest.find('/').unwrap_or(rest.len());
    *pos += end;
    &rest[..end]
}

/// Parses `/{kind}/{id}/{channel}`. The channel must be one the kind
/// defines, and ids are decimal without leading zeros.
pub fn parse_topic(s: &str) -> Result<EntityTopic, ParseError> {
    let err = |position, expected| ParseError { input: s.to_string(), position, expected };
    if !s.starts_with('/') {
        return Err(err(0, "'/'"));
    }
    let mut pos = 1;
    let kind_start = pos;
    let kind = match segment(s, &mut pos) {
        "robot" => EntityKind::Robot,
        "hmd" => EntityKind::Hmd,
        "object" => EntityKind::Object,
        _ => return Err(err(kind_start, "one of robot, hmd, object")),
    };
    if !s[pos..].starts_with('/') {
        return Err(err(pos, "'/'"));
    }
    pos += 1;
    let id_start = pos;
    let digits = segment(s, &mut pos);
    let id_ok = !digits.is_empty()
        && digits.bytes().all(|b| b.is_ascii_digit())
        && (digits == "0" || !digits.starts_with('0'));
    let id: u32 = match id_ok.then(|| digits.parse().ok()).flatten() {
        Some(id) => id,
        None => return Err(err(id_start, "decimal id without leading zeros")),
    };
    if !s[pos..].starts_with('/') {
        return Err(err(pos, "'/'"));
    }
    pos += 1;
    let channel_start = pos;
    let name = &s[pos..];
    let channel = kind
        .channels()
        .iter()
        .copied()
        .find(|c| c.as_str() == name)
        .ok_or_else(|| err(channel_start, "a channel defined for this kind"))?;
    Ok(EntityTopic { kind, id, channel })
}

pub fn format_topic(kind: EntityKind, id: u32, channel: Channel) -> String {
    EntityTopic { kind, id, channel }.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_topics_parse() {
        assert_eq!(
            parse_topic("/robot/2/joint_trajectory").unwrap(),
            EntityTopic::new(EntityKind::Robot, 2, Channel::JointTrajectory)
        );
        assert_eq!(
            parse_topic("/hmd/0/pose").unwrap(),
            EntityTopic::new(EntityKind::Hmd, 0, Channel::Pose)
        );
        assert_eq!(
            parse_topic("/object/17/state").unwrap(),
            EntityTopic::new(EntityKind::Object, 17, Channel::State)
        );
    }

    #[test]
    fn bad_id_reports_its_position() {
        let e = parse_topic("/robot/x/pose").unwrap_err();
        assert_eq!(e.position, 7);
        assert!(e.expected.contains("id"));
    }

    #[test]
    fn rejections() {
        assert_eq!(parse_topic("robot/pose").unwrap_err().position, 0);
        assert_eq!(parse_topic("/robot/01/state").unwrap_err().position, 7);
        assert_eq!(parse_topic("/robot/0/pose").unwrap_err().position, 9);
        assert_eq!(parse_topic("/drone/0/pose").unwrap_err().position, 1);
        assert_eq!(parse_topic("/hmd/0").unwrap_err().position, 6);
        assert!(parse_topic("/hmd/99999999999/pose").is_err());
        assert!(parse_topic("/hmd/0/pose/").is_err());
        assert!(parse_topic("").is_err());
    }

    #[test]
    fn system_topics() {
        assert_eq!(
            TopicName::parse("/system/intent_events").unwrap(),
            TopicName::System("intent_events".into())
        );
        assert!(TopicName::parse("/system/").is_err());
        assert_eq!(TopicName::parse("/system/Bad").unwrap_err().position, 8);
    }

    proptest! {
        #[test]
        fn parser_never_panics(s in "\\PC*") {
            let _ = parse_topic(&s);
            let _ = TopicName::parse(&s);
        }

        #[test]
        fn slashy_strings_never_panic(s in "(/|robot|hmd|object|[0-9]{1,3}|pose|state|x)*") {
            let _ = parse_topic(&s);
        }

        #[test]
        fn format_then_parse_is_identity(k in 0usize..3, id in any::<u32>(), c in 0usize..2) {
            let kind = EntityKind::ALL[k];
            let channels = kind.channels();
            let channel = channels[c % channels.len()];
            let name = format_topic(kind, id, channel);
            prop_assert_eq!(parse_topic(&name).unwrap(), EntityTopic::new(kind, id, channel));
        }
    }
}
