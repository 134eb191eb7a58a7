use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::broker::Record;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FrameType {
    Subscribe,
    Publish,
    Fetch,
    Event,
    Command,
    Error,
}

/// One protocol message. `name` is a topic for SUBSCRIBE, PUBLISH, FETCH
/// and EVENT, and a command name for COMMAND.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    #[serde(rename = "type")]
    pub kind: FrameType,
    #[serde(default)]
    pub name: String,
    /// Correlation id, echoed in the response.
    #[serde(default)]
    pub id: u64,
    #[serde(default)]
    pub body: Value,
}

impl Frame {
    pub fn new(kind: FrameType, name: impl Into<String>, id: u64, body: Value) -> Frame {
        Frame { kind, name: name.into(), id, body }
    }

    pub fn error(name: impl Into<String>, id: u64, code: &str, message: impl Into<String>) -> Frame {
        Frame::new(FrameType::Error, name, id, json!({ "code": code, "message": message.into() }))
    }

    /// EVENT frame carrying a broker record unchanged.
    pub fn event(subscription_id: u64, record: &Record) -> Frame {
        Frame::new(FrameType::Event, record.topic.clone(), subscription_id, record_json(record))
    }

    pub fn parse(bytes: &[u8]) -> Result<Frame, String> {
        serde_json::from_slice(bytes).map_err(|e| e.to_string())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("frames serialize")
    }
}

/// `{topic, offset, publish_stamp, payload}` with UTF-8 payloads as a
/// string and any other bytes as `payload_base64`.
pub fn record_json(record: &Record) -> Value {
    let mut v = json!({
        "topic": record.topic,
        "offset": record.offset,
        "publish_stamp": record.publish_stamp,
    });
    match std::str::from_utf8(&record.payload) {
        Ok(text) => v["payload"] = Value::String(text.to_string()),
        Err(_) => {
            v["payload_base64"] =
                Value::String(base64::engine::general_purpose::STANDARD.encode(&record.payload))
        }
    }
    v
}
