//! Append-only journal file.
//!
//! ```text
//! JOURNAL := FRAME*
//! FRAME   := LEN:u32le CRC:u32le PAYLOAD[LEN]
//! CRC     := CRC-32/ISO-HDLC (the zlib polynomial) of PAYLOAD
//! PAYLOAD := UTF-8 JSON of JournalRecord
//! ```
//!
//! A frame whose header or payload runs past the end of the file, or whose
//! checksum fails while being the last frame, is a torn write and is cut off
//! on open. A bad checksum followed by further bytes is corruption.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::StoreError;

pub const FRAME_HEADER_LEN: usize = 8;

/// One entity state inside a journal record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityWrite {
    pub kind: String,
    pub id: String,
    pub state: serde_json::Value,
}

/// One atomic unit of the journal. All writes of a record become visible
/// together on replay or not at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub seq: u64,
    pub written_at: DateTime<Utc>,
    pub writes: Vec<EntityWrite>,
}

pub fn encode_frame(payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

/// Result of scanning raw journal bytes.
#[derive(Debug)]
pub struct DecodedFrames<'a> {
    pub payloads: Vec<&'a [u8]>,
    /// Byte length of the valid prefix.
    pub valid_len: usize,
    /// Whether bytes past `valid_len` were dropped as a torn tail.
    pub torn_tail: bool,
}

pub fn decode_frames(bytes: &[u8]) -> Result<DecodedFrames<'_>, StoreError> {
    let mut payloads = Vec::new();
    let mut offset = 0;
    while offset < bytes.len() {
        let rest = &bytes[offset..];
        if rest.len() < FRAME_HEADER_LEN {
            return Ok(DecodedFrames {
                payloads,
                valid_len: offset,
                torn_tail: true,
            });
        }
        let len = u32::from_le_bytes(rest[0..4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(rest[4..8].try_into().unwrap());
        let end = FRAME_HEADER_LEN + len;
        if rest.len() < end {
            return Ok(DecodedFrames {
                payloads,
                valid_len: offset,
                torn_tail: true,
            });
        }
        let payload = &rest[FRAME_HEADER_LEN..end];
        if crc32fast::hash(payload) != crc {
            if rest.len() == end {
                return Ok(DecodedFrames {
                    payloads,
                    valid_len: offset,
                    torn_tail: true,
                });
            }
            return Err(StoreError::CorruptJournal(format!(
                "checksum mismatch in frame at byte {offset}"
            )));
        }
        payloads.push(payload);
        offset += end;
    }
    Ok(DecodedFrames {
        payloads,
        valid_len: offset,
        torn_tail: false,
    })
}

pub struct Journal {
    path: PathBuf,
    file: File,
    fsync: bool,
}

impl Journal {
    /// Opens (creating if needed) the journal, drops a torn tail, and
    /// returns the records in order.
    pub fn open(path: &Path, fsync: bool) -> Result<(Journal, Vec<JournalRecord>), StoreError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(path)?;
        // one process per journal; the lock goes away with the file handle
        file.try_lock().map_err(|e| match e {
            std::fs::TryLockError::WouldBlock => StoreError::Io(format!(
                "journal {} is in use by another process",
                path.display()
            )),
            std::fs::TryLockError::Error(e) => e.into(),
        })?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let decoded = decode_frames(&bytes)?;
        let mut records = Vec::with_capacity(decoded.payloads.len());
        for payload in &decoded.payloads {
            let record: JournalRecord = serde_json::from_slice(payload)
                .map_err(|e| StoreError::CorruptJournal(format!("undecodable record: {e}")))?;
            let expected = records.len() as u64 + 1;
            if record.seq != expected {
                return Err(StoreError::CorruptJournal(format!(
                    "sequence gap: expected {expected}, found {}",
                    record.seq
                )));
            }
            records.push(record);
        }
        if decoded.torn_tail {
            file.set_len(decoded.valid_len as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok((
            Journal {
                path: path.to_owned(),
                file,
                fsync,
            },
            records,
        ))
    }

    pub fn append(&mut self, record: &JournalRecord) -> Result<(), StoreError> {
        let payload =
            serde_json::to_vec(record).map_err(|e| StoreError::Serialization(e.to_string()))?;
        self.file.write_all(&encode_frame(&payload))?;
        self.file.flush()?;
        if self.fsync {
            self.file.sync_data()?;
        }
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Atomically replaces the journal with `records` (write to a sibling
    /// file, then rename).
    pub fn rewrite(&mut self, records: &[JournalRecord]) -> Result<(), StoreError> {
        let tmp = self.path.with_extension("compact.tmp");
        {
            let mut out = File::create(&tmp)?;
            for record in records {
                let payload = serde_json::to_vec(record)
                    .map_err(|e| StoreError::Serialization(e.to_string()))?;
                out.write_all(&encode_frame(&payload))?;
            }
            out.sync_all()?;
        }
        std::fs::rename(&tmp, &self.path)?;
        let file = OpenOptions::new()
            .read(true)
            .append(true)
            .open(&self.path)?;
        file.try_lock().map_err(|e| StoreError::Io(e.to_string()))?;
        self.file = file;
        Ok(())
    }
}

impl From<io::Error> for StoreError {
    fn from(e: io::Error) -> Self {
        StoreError::Io(e.to_string())
    }
}
