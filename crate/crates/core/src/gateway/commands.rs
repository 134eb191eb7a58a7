use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::coordinator::{Coordinator, CoordinatorError};
use crate::geometry::Transform;
use crate::intent::IntentConfig;
use crate::message::{decode, JointTrajectory, Message, Nanos, Path};
use crate::topics::{Channel, EntityKind, TopicName};

/// A failed request, reported to the client as an ERROR frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    pub fn new(code: &str, message: impl Into<String>) -> Failure {
        Failure { code: code.into(), message: message.into() }
    }
}

impl From<CoordinatorError> for Failure {
    fn from(e: CoordinatorError) -> Failure {
        Failure::new(e.code(), e.to_string())
    }
}

fn args<T: DeserializeOwned>(body: Value) -> Result<T, Failure> {
    let body = if body.is_null() { json!({}) } else { body };
    serde_json::from_value(body).map_err(|e| Failure::new("BadRequest", e.to_string()))
}

fn out<T: serde::Serialize>(v: T) -> Result<Value, Failure> {
    Ok(serde_json::to_value(v).expect("responses serialize"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterRobot {
    marker: String,
    #[serde(default)]
    model: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObserveMarker {
    label: String,
    marker_in_hmd: Transform,
    #[serde(default)]
    hmd: Option<u32>,
    #[serde(default)]
    hmd_in_anchor: Option<Transform>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Configure {
    #[serde(default)]
    delay_seconds: Option<f64>,
    #[serde(default)]
    pose_rate_hz: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HmdPose {
    hmd: u32,
    pose: Transform,
    #[serde(default)]
    stamp: Option<Nanos>,
}

/// Command names accepted in COMMAND frames.
pub const COMMANDS: &[&str] = &[
    "register_robot",
    "register_hmd",
    "register_object",
    "assign_model",
    "resolve_robot",
    "list_models",
    "list_entities",
    "list_topics",
    "observe_marker",
    "relative_transform",
    "adjust_hologram",
    "hologram_pose",
    "set_hmd_pose",
    "push_hmd_pose",
    "submit_navigation",
    "submit_manipulation",
    "sample_preview",
    "configure",
    "get_config",
];

pub fn run_command(c: &Coordinator, name: &str, body: Value) -> Result<Value, Failure> {
    match name {
        "register_robot" => {
            let a: RegisterRobot = args(body)?;
            out(c.register_robot(&a.marker, a.model.as_deref())?)
        }
        "register_hmd" => {
            let _: serde_json::Map<String, Value> = args(body)?;
            out(c.register_hmd()?)
        }
        "register_object" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                category: String,
            }
            out(c.register_object(&args::<A>(body)?.category)?)
        }
        "assign_model" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                robot: u32,
                model: String,
            }
            let a: A = args(body)?;
            out(&*c.assign_model(a.robot, &a.model)?)
        }
        "resolve_robot" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                name: String,
            }
            out(&*c.resolve_model(&args::<A>(body)?.name)?)
        }
        "list_models" => {
            let (robots, objects) = c.list_models()?;
            out(json!({ "robots": robots, "objects": objects }))
        }
        "list_entities" => {
            let entities = c.registry().entities();
            let models: BTreeMap<u32, String> = entities
                .iter()
                .filter(|e| e.kind == EntityKind::Robot)
                .filter_map(|e| Some((e.id, c.robot_model(e.id)?.0)))
                .collect();
            out(json!({
                "entities": entities,
                "markers": c.marker_poses(),
                "primary_marker": c.primary_marker(),
                "models": models,
            }))
        }
        "list_topics" => {
            let broker = c.broker();
            let topics: Vec<Value> = broker
                .topic_names()
                .into_iter()
                .map(|t| json!({ "length": broker.len(&t).unwrap_or(0), "name": t }))
                .collect();
            out(topics)
        }
        "observe_marker" => {
            let a: ObserveMarker = args(body)?;
            out(c.observe_marker(&a.label, &a.marker_in_hmd, a.hmd, a.hmd_in_anchor)?)
        }
        "relative_transform" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                a: String,
                b: String,
            }
            let a: A = args(body)?;
            out(c.relative_transform(&a.a, &a.b)?)
        }
        "adjust_hologram" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                robot: u32,
                delta: Transform,
            }
            let a: A = args(body)?;
            let offset = c.adjust_hologram(a.robot, &a.delta)?;
            out(json!({ "robot": a.robot, "offset": offset, "pose": c.hologram_pose(a.robot).ok() }))
        }
        "hologram_pose" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                robot: u32,
            }
            out(c.hologram_pose(args::<A>(body)?.robot)?)
        }
        "set_hmd_pose" => {
            let a: HmdPose = args(body)?;
            c.set_hmd_pose(a.hmd, a.pose)?;
            out(json!({}))
        }
        "push_hmd_pose" => {
            let a: HmdPose = args(body)?;
            let stamp = a.stamp.unwrap_or_else(|| c.now());
            out(json!({ "offset": c.push_hmd_pose(a.hmd, a.pose, stamp)? }))
        }
        "submit_navigation" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                robot: u32,
                plan: Path,
            }
            let a: A = args(body)?;
            out(c.submit_navigation(a.robot, a.plan)?)
        }
        "submit_manipulation" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                robot: u32,
                trajectory: JointTrajectory,
            }
            let a: A = args(body)?;
            out(c.submit_manipulation(a.robot, a.trajectory)?)
        }
        "sample_preview" => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct A {
                intent: u64,
                t: f64,
            }
            let a: A = args(body)?;
            out(c.sample_preview(a.intent, a.t)?)
        }
        "configure" => {
            let a: Configure = args(body)?;
            let current = c.config();
            let next = IntentConfig {
                delay_seconds: a.delay_seconds.unwrap_or(current.delay_seconds),
                pose_rate_hz: a.pose_rate_hz.unwrap_or(current.pose_rate_hz),
            };
            c.configure(next)?;
            out(next)
        }
        "get_config" => out(c.config()),
        other => Err(Failure::new("UnknownCommand", format!("unknown command {other:?}"))),
    }
}

/// Validates `body` as the message type of `topic` and publishes it
/// through the owning subsystem, so intents get scheduled and headset
/// samples get checked.
pub fn publish(c: &Coordinator, topic: &str, body: &Value) -> Result<Value, Failure> {
    let entity = match TopicName::parse(topic) {
        Ok(TopicName::Entity(e)) => e,
        Ok(TopicName::System(_)) => {
            return Err(Failure::new("SystemTopic", format!("{topic} is written by the system only")))
        }
        Err(e) => return Err(Failure::new("BadTopic", e.to_string())),
    };
    if c.broker().topic(topic).is_err() {
        return Err(Failure::new("TopicNotFound", format!("topic not found: {topic}")));
    }
    let bytes = serde_json::to_vec(body).expect("json value serializes");
    let message = decode(entity.channel.message_kind(), &bytes)
        .map_err(CoordinatorError::from)?;
    match (entity.channel, message) {
        (Channel::NavigationPlan, Message::Path(p)) => out(c.submit_navigation(entity.id, p)?),
        (Channel::JointTrajectory, Message::JointTrajectory(t)) => {
            out(c.submit_manipulation(entity.id, t)?)
        }
        (Channel::Pose, Message::PoseStamped(p)) => {
            let offset = c.push_hmd_pose(entity.id, p.pose.into(), p.header.stamp)?;
            out(json!({ "topic": topic, "offset": offset }))
        }
        (Channel::State, Message::ObjectState(s)) => {
            out(json!({ "topic": topic, "offset": c.publish_object_state(entity.id, s)? }))
        }
        _ => unreachable!("decode returns the channel's message kind"),
    }
}
