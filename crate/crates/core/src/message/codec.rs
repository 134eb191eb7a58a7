use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::types::*;
use super::validate::{validate, Violation};

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("malformed payload: {0}")]
    Decode(String),
    #[error("schema mismatch: expected {expected}, payload looks like {found}")]
    SchemaMismatch { expected: MessageKind, found: MessageKind },
    #[error("validation failed: {}", join(.0))]
    Validation(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

impl CodecError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            CodecError::Validation(v) => v,
            _ => &[],
        }
    }
}

fn to_bytes<T: Serialize>(m: &T) -> Vec<u8> {
    // Plain data structs with string keys cannot fail to serialize.
    serde_json::to_vec(m).expect("message serialization is infallible")
}

/// Encodes a message as canonical JSON after validating it.
pub fn encode(message: &Message) -> Result<Vec<u8>, CodecError> {
    let violations = validate(message);
    if !violations.is_empty() {
        return Err(CodecError::Validation(violations));
    }
    Ok(match message {
        Message::PoseStamped(m) => to_bytes(m),
        Message::Path(m) => to_bytes(m),
        Message::JointTrajectory(m) => to_bytes(m),
        Message::ObjectState(m) => to_bytes(m),
        Message::IntentEvent(m) => to_bytes(m),
    })
}

fn strict<T: DeserializeOwned>(value: Value) -> Result<T, CodecError> {
    serde_json::from_value(value).map_err(|e| CodecError::Decode(e.to_string()))
}

/// Which kind's top-level key set the object carries, if exactly one.
fn sniff(obj: &serde_json::Map<String, Value>) -> Option<MessageKind> {
    MessageKind::ALL.into_iter().find(|k| {
        let fields = k.fields();
        fields.len() == obj.len() && fields.iter().all(|f| obj.contains_key(*f))
    })
}

/// Decodes and validates a payload of the given kind. Unknown fields are
/// rejected.
pub fn decode(kind: MessageKind, payload: &[u8]) -> Result<Message, CodecError> {
    let value: Value =
        serde_json::from_slice(payload).map_err(|e| CodecError::Decode(e.to_string()))?;
    let Value::Object(obj) = &value else {
        return Err(CodecError::Decode("payload must be a JSON object".into()));
    };
    if let Some(found) = sniff(obj) {
        if found != kind {
            return Err(CodecError::SchemaMismatch { expected: kind, found });
        }
    }
    let message = match kind {
        MessageKind::PoseStamped => Message::PoseStamped(strict(value)?),
        MessageKind::Path => Message::Path(strict(value)?),
        MessageKind::JointTrajectory => Message::JointTrajectory(strict(value)?),
        MessageKind::ObjectState => Message::ObjectState(strict(value)?),
        MessageKind::IntentEvent => Message::IntentEvent(strict(value)?),
    };
    let violations = validate(&message);
    if violations.is_empty() {
        Ok(message)
    } else {
        Err(CodecError::Validation(violations))
    }
}
