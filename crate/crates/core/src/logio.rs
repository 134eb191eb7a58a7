//! Newline-delimited JSON export and re-import of one topic's log.
//!
//! The first line is a comment, `# topic=<name> records=<n>`. Each further
//! line is one record with its offset, publish stamp and payload. UTF-8
//! payloads are stored as a JSON string under `payload`, anything else as
//! base64 under `payload_base64`, so a re-import reproduces the bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::broker::{Broker, BrokerError, Record};
use crate::message::Nanos;

#[derive(Debug, thiserror::Error)]
pub enum LogIoError {
    #[error(transparent)]
    Broker(#[from] BrokerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    offset: u64,
    publish_stamp: Nanos,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payload: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payload_base64: Option<String>,
}

impl From<&Record> for Line {
    fn from(r: &Record) -> Self {
        match std::str::from_utf8(&r.payload) {
            Ok(s) => Line {
                offset: r.offset,
                publish_stamp: r.publish_stamp,
                payload: Some(s.to_string()),
                payload_base64: None,
            },
            Err(_) => Line {
                offset: r.offset,
                publish_stamp: r.publish_stamp,
                payload: None,
                payload_base64: Some(base64::engine::general_purpose::STANDARD.encode(&r.payload)),
            },
        }
    }
}

/// Writes every record of `topic` to `path`. Returns the record count.
pub fn export_log(broker: &Broker, topic: &str, path: &Path) -> Result<u64, LogIoError> {
    let records = broker.fetch(topic, 0, usize::MAX)?;
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# topic={topic} records={}", records.len())?;
    for r in &records {
        serde_json::to_writer(&mut out, &Line::from(r)).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(records.len() as u64)
}

/// Appends the records in `path` to their topic, keeping their original
/// stamps. Returns the topic name and the number of records imported.
pub fn import_log(broker: &Broker, path: &Path) -> Result<(String, u64), LogIoError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let topic = header
        .strip_prefix("# topic=")
        .and_then(|rest| rest.split_whitespace().next())
        .ok_or_else(|| LogIoError::Format { line: 1, reason: "missing '# topic=' header".into() })?
        .to_string();
    broker.create_topic(&topic)?;
    let mut count = 0;
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let format = |reason: String| LogIoError::Format { line: i + 2, reason };
        let parsed: Line = serde_json::from_str(&line).map_err(|e| format(e.to_string()))?;
        let payload = match (parsed.payload, parsed.payload_base64) {
            (Some(text), None) => text.into_bytes(),
            (None, Some(b64)) => base64::engine::general_purpose::STANDARD
                .decode(b64)
                .map_err(|e| format(e.to_string()))?,
            _ => return Err(format("exactly one of payload, payload_base64 required".into())),
        };
        broker.publish(&topic, payload, parsed.publish_stamp)?;
        count += 1;
    }
    Ok((topic, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::broker::BrokerConfig;

    #[test]
    fn round_trip_preserves_records() {
        let a = Broker::in_memory(BrokerConfig::default());
        a.create_topic("/hmd/0/pose").unwrap();
        a.publish("/hmd/0/pose", &b"{\"x\":1}"[..], 5).unwrap();
        a.publish("/hmd/0/pose", &[0xffu8, 0x00][..], 9).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.ndjson");
        assert_eq!(export_log(&a, "/hmd/0/pose", &path).unwrap(), 2);
        let b = Broker::in_memory(BrokerConfig::default());
        assert_eq!(import_log(&b, &path).unwrap(), ("/hmd/0/pose".into(), 2));
        assert_eq!(
            a.fetch("/hmd/0/pose", 0, 10).unwrap(),
            b.fetch("/hmd/0/pose", 0, 10).unwrap()
        );
    }

    #[test]
    fn empty_and_unknown_topics() {
        let a = Broker::in_memory(BrokerConfig::default());
        a.create_topic("/object/0/state").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.ndjson");
        export_log(&a, "/object/0/state", &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "# topic=/object/0/state records=0\n");
        assert!(matches!(
            export_log(&a, "/object/9/state", &path),
            Err(LogIoError::Broker(BrokerError::TopicNotFound(_)))
        ));
    }

    #[test]
    fn bad_lines_are_located() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ndjson");
        std::fs::write(&path, "# topic=/hmd/0/pose records=1\n{\"offset\":0}\n").unwrap();
        let b = Broker::in_memory(BrokerConfig::default());
        assert!(matches!(import_log(&b, &path), Err(LogIoError::Format { line: 2, .. })));
        std::fs::write(&path, "no header\n").unwrap();
        assert!(matches!(import_log(&b, &path), Err(LogIoError::Format { line: 1, .. })));
    }
}
