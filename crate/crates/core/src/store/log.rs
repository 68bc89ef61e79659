//! Append-only JSONL event log.
//!
//! One JSON object per line: `{"v":1,"seq":..,"ts":..,"team":..,"digest":..,"score":..}`.
//! A record is committed once its terminating newline is on disk; an
//! unterminated last line is a torn write and is excluded on read.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const EVENT_SCHEMA_VERSION: u32 = 1;

/// One scored submission.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub seq: u64,
    /// Milliseconds since the Unix epoch, supplied by the caller.
    pub ts: u64,
    pub team: String,
    /// Hex SHA-256 of the submission's canonical bytes.
    pub digest: String,
    /// Released score; `None` when the submission placed nowhere.
    pub score: Option<f64>,
}

#[derive(Serialize)]
struct WireOut<'a> {
    v: u32,
    seq: u64,
    ts: u64,
    team: &'a str,
    digest: &'a str,
    score: Option<f64>,
}

#[derive(Deserialize)]
struct WireVersion {
    v: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WireIn {
    #[allow(dead_code)]
    v: u32,
    seq: u64,
    ts: u64,
    team: String,
    digest: String,
    score: Option<f64>,
}

impl Event {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(&WireOut {
            v: EVENT_SCHEMA_VERSION,
            seq: self.seq,
            ts: self.ts,
            team: &self.team,
            digest: &self.digest,
            score: self.score,
        })
        .expect("event serializes");
        s.push('\n');
        s
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let WireVersion { v } = serde_json::from_str(line)?;
        if v != EVENT_SCHEMA_VERSION {
            return Err(Error::UnsupportedVersion(v));
        }
        let w: WireIn = serde_json::from_str(line)?;
        Ok(Event {
            seq: w.seq,
            ts: w.ts,
            team: w.team,
            digest: w.digest,
            score: w.score,
        })
    }
}

/// Unterminated bytes found after the last complete record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TornTail {
    pub offset: u64,
    pub len: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogContents {
    pub events: Vec<Event>,
    pub torn: Option<TornTail>,
}

/// Reads every committed event, checking that sequence numbers run 1, 2, 3, ...
pub fn read_log(path: impl AsRef<Path>) -> Result<LogContents> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    parse_log(&buf)
}

pub fn parse_log(buf: &[u8]) -> Result<LogContents> {
    let committed = buf.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let torn = (committed < buf.len()).then(|| {
        log::warn!(
            "event log has a torn trailing record ({} bytes), ignoring it",
            buf.len() - committed
        );
        TornTail {
            offset: committed as u64,
            len: (buf.len() - committed) as u64,
        }
    });
    let mut events = Vec::new();
    let lines = buf[..committed.saturating_sub(1)].split(|&b| b == b'\n');
    for (index, line) in lines.take_while(|_| committed > 0).enumerate() {
        let text = std::str::from_utf8(line).map_err(|e| Error::CorruptRecord {
            index,
            message: e.to_string(),
        })?;
        let event = match Event::from_line(text) {
            Ok(e) => e,
            Err(Error::UnsupportedVersion(v)) => return Err(Error::UnsupportedVersion(v)),
            Err(e) => {
                return Err(Error::CorruptRecord {
                    index,
                    message: e.to_string(),
                })
            }
        };
        let want = events.len() as u64 + 1;
        if event.seq != want {
            return Err(Error::Consistency(format!(
                "record {index} has seq {}, expected {want}",
                event.seq
            )));
        }
        events.push(event);
    }
    Ok(LogContents { events, torn })
}

/// Single-writer handle on an event log file.
#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
    last_seq: u64,
    sync: bool,
}

impl EventLog {
    /// Creates a new empty log; fails if the file exists.
    pub fn create(path: impl Into<PathBuf>, sync: bool) -> Result<Self> {
        let path = path.into();
        let file = OpenOptions::new()
            .append(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        Ok(EventLog {
            path,
            file,
            last_seq: 0,
            sync,
        })
    }

    /// Opens an existing log for appending. A torn tail is cut off so the
    /// next record starts on a fresh line.
    pub fn open(path: impl Into<PathBuf>, sync: bool) -> Result<(Self, LogContents)> {
        let path = path.into();
        let contents = read_log(&path)?;
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        if let Some(torn) = &contents.torn {
            file.set_len(torn.offset).map_err(|e| Error::io(&path, e))?;
        }
        let last_seq = contents.events.last().map_or(0, |e| e.seq);
        Ok((
            EventLog {
                path,
                file,
                last_seq,
                sync,
            },
            contents,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub fn set_sync(&mut self, sync: bool) {
        self.sync = sync;
    }

    pub fn append(&mut self, event: &Event) -> Result<()> {
        if event.seq != self.last_seq + 1 {
            return Err(Error::Consistency(format!(
                "append of seq {} after seq {}",
                event.seq, self.last_seq
            )));
        }
        self.file
            .write_all(event.to_line().as_bytes())
            .map_err(|e| Error::io(&self.path, e))?;
        if self.sync {
            self.file.sync_data().map_err(|e| Error::io(&self.path, e))?;
        }
        self.last_seq = event.seq;
        Ok(())
    }
}
