//! Append-only journal: one JSON object per line,
//! `{"seq":N,"kind":"...","payload":{...}}`.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::metamodel::{Category, Forecast, InstanceId, TimedValue};
use crate::time::Timestamp;

pub const JOURNAL_FILE: &str = "nim.journal";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum JournalEvent {
    ModelRegistered {
        model_id: String,
        source: String,
        types: Vec<String>,
        registered_at: Timestamp,
    },
    InstanceCreated {
        category: Category,
    },
    ValueAppended {
        instance_id: InstanceId,
        path: Vec<String>,
        value: TimedValue,
    },
    ForecastAdded {
        instance_id: InstanceId,
        path: Vec<String>,
        forecast: Forecast,
    },
    Purged {
        now: Timestamp,
        deleted: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub seq: u64,
    #[serde(flatten)]
    pub event: JournalEvent,
}

/// Where and why reading a journal stopped early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JournalWarning {
    /// 1-based line number of the first rejected record.
    pub line: usize,
    /// Byte offset where the rejected record starts.
    pub offset: u64,
    pub reason: String,
}

impl std::fmt::Display for JournalWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "journal line {} (byte {}): {}; later records ignored",
            self.line, self.offset, self.reason
        )
    }
}

/// One decoded record together with its location in the file.
#[derive(Debug, Clone)]
pub struct RawRecord {
    pub record: JournalRecord,
    pub line: usize,
    pub offset: u64,
    pub end: u64,
}

/// Decodes records until end of input or the first line that is truncated,
/// malformed or out of sequence.
pub fn read_records(mut reader: impl BufRead) -> io::Result<(Vec<RawRecord>, Option<JournalWarning>)> {
    let mut out = Vec::new();
    let mut buf = Vec::new();
    let mut offset = 0u64;
    let mut last_seq = 0u64;
    let mut line = 0usize;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok((out, None));
        }
        line += 1;
        let warn = |reason: String| JournalWarning { line, offset, reason };
        if buf.last() != Some(&b'\n') {
            return Ok((out, Some(warn("truncated record".into()))));
        }
        let record: JournalRecord = match serde_json::from_slice(&buf[..buf.len() - 1]) {
            Ok(r) => r,
            Err(e) => return Ok((out, Some(warn(format!("corrupt record: {e}"))))),
        };
        if record.seq <= last_seq {
            return Ok((
                out,
                Some(warn(format!(
                    "sequence number {} does not follow {last_seq}",
                    record.seq
                ))),
            ));
        }
        last_seq = record.seq;
        let end = offset + n as u64;
        out.push(RawRecord {
            record,
            line,
            offset,
            end,
        });
        offset = end;
    }
}

#[derive(Debug)]
pub struct JournalWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JournalWriter {
    /// Opens `path` for appending after cutting it to `valid_len` bytes, so a
    /// damaged tail does not precede new records.
    pub fn open(path: &Path, valid_len: u64) -> io::Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .write(true)
            .truncate(false)
            .open(path)?;
        if file.metadata()?.len() != valid_len {
            file.set_len(valid_len)?;
        }
        let mut out = BufWriter::new(file);
        io::Seek::seek(out.get_mut(), io::SeekFrom::Start(valid_len))?;
        Ok(Self {
            path: path.to_owned(),
            out,
        })
    }

    pub fn append(&mut self, record: &JournalRecord) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
