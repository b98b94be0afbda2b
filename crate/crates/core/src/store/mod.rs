//! Repository over an append-only journal with in-memory indexes.
//!
//! Every mutation runs inside [`Store::transact`]. Transactions are serialized
//! by a single writer lock; all writes a transaction stages are appended as
//! one journal record and then published to readers as a new immutable
//! [`Tables`] snapshot. Readers never observe a partially applied
//! transaction, before or after a restart.

mod journal;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accounts::AuthToken;
use crate::aggregation::GoldBatch;
use crate::clock::{Clock, SystemClock};
use crate::domain::{Argument, Judgment, ScoreEvent, UserAccount};
use crate::engine::{LevelSession, ProgressRecord};
use crate::moderation::SpamReport;
use crate::pvp::{Match, Notification};

pub use journal::{
    decode_frames, encode_frame, DecodedFrames, EntityWrite, Journal, JournalRecord,
    FRAME_HEADER_LEN,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("version conflict on {kind} {id}: expected {expected}, found {found}")]
    VersionConflict {
        kind: &'static str,
        id: String,
        expected: u64,
        found: u64,
    },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("corrupt journal: {0}")]
    CorruptJournal(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

/// An entity that lives in one of the store's tables.
pub trait Record: Clone + Serialize + DeserializeOwned + 'static {
    const KIND: &'static str;

    fn key(&self) -> String;

    /// Optimistic-concurrency counter; entities without one report 0.
    fn version(&self) -> u64 {
        0
    }

    fn table(tables: &Tables) -> &BTreeMap<String, Self>;
    fn table_mut(tables: &mut Tables) -> &mut BTreeMap<String, Self>;
}

/// Named monotone counter used for id allocation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counter {
    pub name: String,
    pub value: u64,
}

macro_rules! tables {
    ($($field:ident : $ty:ty => $kind:literal),* $(,)?) => {
        /// All entity tables, keyed by entity id. `BTreeMap` keeps every scan
        /// in a deterministic order.
        #[derive(Debug, Clone, Default, PartialEq)]
        pub struct Tables {
            /// Sequence number of the last applied journal record.
            pub sequence: u64,
            $(pub $field: BTreeMap<String, $ty>,)*
        }

        $(
            impl Record for $ty {
                const KIND: &'static str = $kind;

                fn key(&self) -> String {
                    Keyed::key(self)
                }

                fn version(&self) -> u64 {
                    Keyed::version(self)
                }

                fn table(tables: &Tables) -> &BTreeMap<String, Self> {
                    &tables.$field
                }

                fn table_mut(tables: &mut Tables) -> &mut BTreeMap<String, Self> {
                    &mut tables.$field
                }
            }
        )*

        impl Tables {
            fn apply_write(&mut self, write: &EntityWrite) -> Result<(), StoreError> {
                match write.kind.as_str() {
                    $(
                        $kind => {
                            let value: $ty = serde_json::from_value(write.state.clone())
                                .map_err(|e| StoreError::CorruptJournal(format!(
                                    "bad {} {}: {e}", $kind, write.id
                                )))?;
                            self.$field.insert(write.id.clone(), value);
                        }
                    )*
                    other => {
                        return Err(StoreError::CorruptJournal(format!("unknown entity kind {other}")))
                    }
                }
                Ok(())
            }

            fn to_writes(&self) -> Result<Vec<EntityWrite>, StoreError> {
                let mut writes = Vec::new();
                $(
                    for (id, value) in &self.$field {
                        writes.push(EntityWrite {
                            kind: $kind.to_owned(),
                            id: id.clone(),
                            state: serde_json::to_value(value)
                                .map_err(|e| StoreError::Serialization(e.to_string()))?,
                        });
                    }
                )*
                Ok(writes)
            }

            fn merge_from(&mut self, delta: Tables) {
                $(self.$field.extend(delta.$field);)*
            }

            fn is_empty_delta(&self) -> bool {
                true $(&& self.$field.is_empty())*
            }
        }
    };
}

/// Key and version accessors, implemented next to each entity type.
pub trait Keyed {
    fn key(&self) -> String;
    fn version(&self) -> u64 {
        0
    }
}

tables! {
    users: UserAccount => "user",
    tokens: AuthToken => "token",
    arguments: Argument => "argument",
    judgments: Judgment => "judgment",
    scores: ScoreEvent => "score",
    sessions: LevelSession => "session",
    progress: ProgressRecord => "progress",
    matches: Match => "match",
    notifications: Notification => "notification",
    reports: SpamReport => "report",
    batches: GoldBatch => "batch",
    counters: Counter => "counter",
}

impl Keyed for Counter {
    fn key(&self) -> String {
        self.name.clone()
    }
}

impl Keyed for UserAccount {
    fn key(&self) -> String {
        self.id.0.clone()
    }
}

impl Keyed for Argument {
    fn key(&self) -> String {
        self.id.0.clone()
    }
}

impl Keyed for Judgment {
    fn key(&self) -> String {
        Judgment::key(self)
    }
}

impl Keyed for ScoreEvent {
    fn key(&self) -> String {
        self.id.clone()
    }
}

impl Tables {
    pub fn get<R: Record>(&self, key: &str) -> Option<&R> {
        R::table(self).get(key)
    }

    pub fn iter<R: Record>(&self) -> impl Iterator<Item = &R> {
        R::table(self).values()
    }
}

/// Staged writes of one transaction with read-your-writes lookups.
pub struct Tx<'a> {
    base: &'a Tables,
    delta: Tables,
}

impl<'a> Tx<'a> {
    pub fn get<R: Record>(&self, key: &str) -> Option<R> {
        R::table(&self.delta)
            .get(key)
            .or_else(|| R::table(self.base).get(key))
            .cloned()
    }

    /// All entities of a kind matching `pred`, including staged writes, in
    /// key order.
    pub fn scan<R: Record>(&self, mut pred: impl FnMut(&R) -> bool) -> Vec<R> {
        let staged = R::table(&self.delta);
        let mut merged: BTreeMap<&String, &R> = R::table(self.base).iter().collect();
        merged.extend(staged.iter());
        merged.into_values().filter(|r| pred(r)).cloned().collect()
    }

    /// Committed state as of the start of this transaction.
    pub fn base(&self) -> &Tables {
        self.base
    }

    pub fn put<R: Record>(&mut self, record: R) {
        R::table_mut(&mut self.delta).insert(record.key(), record);
    }

    /// Stages `record` only if the stored version equals `expected_version`
    /// (0 for an absent entity).
    pub fn compare_and_put<R: Record>(
        &mut self,
        record: R,
        expected_version: u64,
    ) -> Result<(), StoreError> {
        let key = record.key();
        let found = self.get::<R>(&key).map(|r| r.version()).unwrap_or(0);
        if found != expected_version {
            return Err(StoreError::VersionConflict {
                kind: R::KIND,
                id: key,
                expected: expected_version,
                found,
            });
        }
        self.put(record);
        Ok(())
    }

    /// Allocates the next id with the given prefix, e.g. `arg-000007`.
    pub fn next_id(&mut self, prefix: &str) -> String {
        let value = self.get::<Counter>(prefix).map(|c| c.value).unwrap_or(0) + 1;
        self.put(Counter {
            name: prefix.to_owned(),
            value,
        });
        format!("{prefix}-{value:06}")
    }
}

struct Writer {
    journal: Option<Journal>,
}

pub struct Store {
    state: RwLock<Arc<Tables>>,
    writer: Mutex<Writer>,
    clock: Arc<dyn Clock>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StoreOptions {
    /// `fsync` after every record. Without it, acknowledged writes survive a
    /// process crash but not a power loss.
    pub fsync: bool,
}

impl Store {
    pub fn in_memory() -> Store {
        Store::with_parts(Tables::default(), None, Arc::new(SystemClock))
    }

    pub fn in_memory_with_clock(clock: Arc<dyn Clock>) -> Store {
        Store::with_parts(Tables::default(), None, clock)
    }

    /// Opens a journal-backed store, replaying every complete record.
    pub fn open(
        path: &Path,
        options: StoreOptions,
        clock: Arc<dyn Clock>,
    ) -> Result<Store, StoreError> {
        let (journal, records) = Journal::open(path, options.fsync)?;
        let mut tables = Tables::default();
        for record in &records {
            for write in &record.writes {
                tables.apply_write(write)?;
            }
            tables.sequence = record.seq;
        }
        Ok(Store::with_parts(tables, Some(journal), clock))
    }

    fn with_parts(tables: Tables, journal: Option<Journal>, clock: Arc<dyn Clock>) -> Store {
        Store {
            state: RwLock::new(Arc::new(tables)),
            writer: Mutex::new(Writer { journal }),
            clock,
        }
    }

    /// A consistent view of every table, taken now.
    pub fn snapshot(&self) -> Arc<Tables> {
        self.state.read().unwrap().clone()
    }

    pub fn get<R: Record>(&self, key: &str) -> Option<R> {
        self.snapshot().get::<R>(key).cloned()
    }

    pub fn scan<R: Record>(&self, mut pred: impl FnMut(&R) -> bool) -> Vec<R> {
        self.snapshot()
            .iter::<R>()
            .filter(|r| pred(r))
            .cloned()
            .collect()
    }

    pub fn put<R: Record>(&self, record: R) -> Result<(), StoreError> {
        self.transact(|tx| {
            tx.put(record);
            Ok::<_, StoreError>(())
        })
    }

    pub fn compare_and_put<R: Record>(
        &self,
        record: R,
        expected_version: u64,
    ) -> Result<(), StoreError> {
        self.transact(|tx| tx.compare_and_put(record, expected_version))
    }

    /// Runs `f` against the current state and commits its staged writes as
    /// one journal record. Nothing is written if `f` fails.
    pub fn transact<T, E>(&self, f: impl FnOnce(&mut Tx<'_>) -> Result<T, E>) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let mut writer = self.writer.lock().unwrap();
        let base = self.snapshot();
        let (value, delta) = {
            let mut tx = Tx {
                base: &base,
                delta: Tables::default(),
            };
            let value = f(&mut tx)?;
            (value, tx.delta)
        };
        if delta.is_empty_delta() {
            return Ok(value);
        }
        let seq = base.sequence + 1;
        drop(base);
        if let Some(journal) = writer.journal.as_mut() {
            let record = JournalRecord {
                seq,
                written_at: self.clock.now(),
                writes: delta.to_writes()?,
            };
            journal.append(&record)?;
        }
        let mut state = self.state.write().unwrap();
        let tables = Arc::make_mut(&mut state);
        tables.merge_from(delta);
        tables.sequence = seq;
        Ok(value)
    }

    /// Rewrites the journal as a single record holding the current state.
    pub fn compact(&self) -> Result<(), StoreError> {
        let mut writer = self.writer.lock().unwrap();
        let Some(journal) = writer.journal.as_mut() else {
            return Ok(());
        };
        let snapshot = self.snapshot();
        let record = JournalRecord {
            seq: 1,
            written_at: self.clock.now(),
            writes: snapshot.to_writes()?,
        };
        journal.rewrite(std::slice::from_ref(&record))?;
        drop(snapshot);
        let mut state = self.state.write().unwrap();
        Arc::make_mut(&mut state).sequence = 1;
        Ok(())
    }
}
