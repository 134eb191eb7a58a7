//! On-disk layout for a persistent broker.
//!
//! Each topic lives in `<dir>/<hex(topic name)>.log`:
//!
//! ```text
//! magic   b"HILOG\x01"
//! u16 BE  topic name length, then the UTF-8 name
//! record* u32 BE frame length N, u64 BE offset, u64 BE publish stamp,
//!         N - 16 payload bytes
//! ```
//!
//! Committed consumer offsets are kept in `<dir>/cursors.json`, rewritten
//! through a temporary file and rename on every commit.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use bytes::Bytes;

use super::Record;

const MAGIC: &[u8; 6] = b"HILOG\x01";
const CURSORS_FILE: &str = "cursors.json";

pub(crate) struct Store {
    dir: PathBuf,
}

pub(crate) struct LoadedTopic {
    pub name: String,
    pub records: Vec<Record>,
}

impl Store {
    pub fn open(dir: &Path) -> io::Result<Store> {
        fs::create_dir_all(dir)?;
        Ok(Store { dir: dir.to_path_buf() })
    }

    fn topic_path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{}.log", hex::encode(name)))
    }

    pub fn create_topic(&self, name: &str) -> io::Result<()> {
        let path = self.topic_path(name);
        if path.exists() {
            return Ok(());
        }
        let mut f = File::create(path)?;
        f.write_all(MAGIC)?;
        f.write_all(&(name.len() as u16).to_be_bytes())?;
        f.write_all(name.as_bytes())?;
        f.sync_data()
    }

    pub fn append(&self, record: &Record) -> io::Result<()> {
        let f = OpenOptions::new().append(true).open(self.topic_path(&record.topic))?;
        let mut w = BufWriter::new(f);
        let len = 16 + record.payload.len();
        let len = u32::try_from(len)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "record too large"))?;
        w.write_all(&len.to_be_bytes())?;
        w.write_all(&record.offset.to_be_bytes())?;
        w.write_all(&record.publish_stamp.to_be_bytes())?;
        w.write_all(&record.payload)?;
        w.flush()
    }

    pub fn load_topics(&self) -> io::Result<Vec<LoadedTopic>> {
        let mut out = Vec::new();
        let mut entries: Vec<_> = fs::read_dir(&self.dir)?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "log"))
            .collect();
        entries.sort();
        for path in entries {
            out.push(read_topic_file(&path)?);
        }
        Ok(out)
    }

    pub fn save_cursors(&self, cursors: &BTreeMap<String, BTreeMap<String, u64>>) -> io::Result<()> {
        let tmp = self.dir.join(format!("{CURSORS_FILE}.tmp"));
        let body = serde_json::to_vec_pretty(cursors).map_err(io::Error::other)?;
        fs::write(&tmp, body)?;
        fs::rename(tmp, self.dir.join(CURSORS_FILE))
    }

    pub fn load_cursors(&self) -> io::Result<BTreeMap<String, BTreeMap<String, u64>>> {
        match fs::read(self.dir.join(CURSORS_FILE)) {
            Ok(body) => serde_json::from_slice(&body).map_err(io::Error::other),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(e),
        }
    }
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

fn read_topic_file(path: &Path) -> io::Result<LoadedTopic> {
    let mut data = Vec::new();
    File::open(path)?.read_to_end(&mut data)?;
    if data.len() < MAGIC.len() + 2 || &data[..MAGIC.len()] != MAGIC {
        return Err(invalid("bad topic log header"));
    }
    let mut pos = MAGIC.len();
    let name_len = u16::from_be_bytes([data[pos], data[pos + 1]]) as usize;
    pos += 2;
    let name = data
        .get(pos..pos + name_len)
        .and_then(|b| std::str::from_utf8(b).ok())
        .ok_or_else(|| invalid("bad topic name"))?
        .to_string();
    pos += name_len;
    let mut records = Vec::new();
    while pos + 4 <= data.len() {
        let len = u32::from_be_bytes(data[pos..pos + 4].try_into().unwrap()) as usize;
        if len < 16 || pos + 4 + len > data.len() {
            tracing::warn!(topic = %name, "ignoring torn record at end of log");
            break;
        }
        let body = &data[pos + 4..pos + 4 + len];
        let offset = u64::from_be_bytes(body[..8].try_into().unwrap());
        let publish_stamp = u64::from_be_bytes(body[8..16].try_into().unwrap());
        if offset != records.len() as u64 {
            return Err(invalid("non-contiguous offsets in topic log"));
        }
        records.push(Record {
            topic: name.clone(),
            offset,
            publish_stamp,
            payload: Bytes::copy_from_slice(&body[16..]),
        });
        pos += 4 + len;
    }
    Ok(LoadedTopic { name, records })
}
