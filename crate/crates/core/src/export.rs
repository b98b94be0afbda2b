//! CC-BY corpus export as JSON lines plus a manifest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aggregation::{AggregationConfig, GoldBatch};
use crate::domain::{
    check_distribution, Argument, ArgumentId, ArgumentStatus, BatchId, FallacyLabel,
    JudgmentSource, TopicId, UserId, LABEL_COUNT,
};
use crate::error::{Error, Result};
use crate::platform::Platform;
use crate::store::{Counter, Tables};

pub const CORPUS_SCHEMA_VERSION: u32 = 1;
pub const LICENSE: &str = "CC-BY";
/// Counter holding the secret salt for author pseudonyms.
pub(crate) const SALT_COUNTER: &str = "export_salt";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportFilter {
    pub language: Option<String>,
    pub gold_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusJudgment {
    pub label: FallacyLabel,
    pub source: JudgmentSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub id: ArgumentId,
    pub language: String,
    pub topic_id: TopicId,
    pub topic_title: String,
    pub text: String,
    pub assigned_type: FallacyLabel,
    pub author_pseudonym: String,
    pub judgments: Vec<CorpusJudgment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<FallacyLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior: Option<[f64; LABEL_COUNT]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_nats: Option<f64>,
    pub license: String,
}

impl CorpusRecord {
    /// Checks the constraints of the published record schema that serde
    /// alone does not enforce.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.license != LICENSE {
            return Err(format!("{}: license must be {LICENSE}", self.id));
        }
        if self.text.trim().is_empty() || self.topic_title.trim().is_empty() {
            return Err(format!("{}: empty text or topic title", self.id));
        }
        if self.author_pseudonym.len() != 16
            || !self.author_pseudonym.chars().all(|c| c.is_ascii_hexdigit())
        {
            return Err(format!("{}: malformed author pseudonym", self.id));
        }
        match (self.gold_label, self.posterior, self.entropy_nats) {
            (None, None, None) => {}
            (Some(label), Some(p), Some(h)) => {
                check_distribution(&p).map_err(|e| format!("{}: {e}", self.id))?;
                let best = p.iter().cloned().fold(f64::MIN, f64::max);
                if p[label.index()] != best {
                    return Err(format!("{}: gold label is not the posterior mode", self.id));
                }
                if !(h.is_finite() && h >= 0.0 && h <= (LABEL_COUNT as f64).ln() + 1e-9) {
                    return Err(format!("{}: entropy out of range", self.id));
                }
            }
            _ => {
                return Err(format!(
                    "{}: gold_label, posterior and entropy_nats go together",
                    self.id
                ))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub schema_version: u32,
    pub license: String,
    pub record_count: usize,
    pub language: Option<String>,
    pub gold_only: bool,
    pub batch_id: Option<BatchId>,
    pub aggregation: AggregationConfig,
    pub journal_sequence: u64,
    pub exported_at: DateTime<Utc>,
}

/// Stable pseudonym of an author: the first 64 bits of
/// SHA-256(salt || author id), hex encoded.
pub fn author_pseudonym(salt: u64, author: &UserId) -> String {
    let mut hasher = Sha256::new();
    hasher.update(salt.to_le_bytes());
    hasher.update(author.as_str().as_bytes());
    hex::encode(&hasher.finalize()[..8])
}

fn latest_batch(tables: &Tables) -> Option<&GoldBatch> {
    tables
        .iter::<GoldBatch>()
        .max_by(|a, b| a.created_at.cmp(&b.created_at).then(a.id.cmp(&b.id)))
}

/// Records for every exportable argument in `tables`, in id order.
/// Flagged, removed and bot-copied arguments are never exported; only human
/// judgments are listed.
pub fn corpus_records(
    platform: &Platform,
    tables: &Tables,
    filter: &ExportFilter,
) -> Vec<CorpusRecord> {
    let salt = tables
        .get::<Counter>(SALT_COUNTER)
        .map(|c| c.value)
        .unwrap_or(0);
    let mut records = Vec::new();
    for a in tables.iter::<Argument>() {
        if a.status != ArgumentStatus::Active || a.author_id.is_bot() {
            continue;
        }
        if filter.language.as_ref().is_some_and(|l| l != &a.language) {
            continue;
        }
        if filter.gold_only && a.gold.is_none() {
            continue;
        }
        records.push(record(platform, tables, a, salt));
    }
    records
}

fn record(platform: &Platform, tables: &Tables, a: &Argument, salt: u64) -> CorpusRecord {
    let prefix = format!("{}|", a.id);
    let judgments = tables
        .judgments
        .range(prefix.clone()..)
        .take_while(|(k, _)| k.starts_with(&prefix))
        .map(|(_, j)| j)
        .filter(|j| j.rater_id.is_human())
        .map(|j| CorpusJudgment {
            label: j.label,
            source: j.source,
        })
        .collect();
    CorpusRecord {
        id: a.id.clone(),
        language: a.language.clone(),
        topic_id: a.topic_id.clone(),
        topic_title: platform
            .catalog
            .topic(&a.topic_id)
            .map(|t| t.title.clone())
            .unwrap_or_default(),
        text: a.text.clone(),
        assigned_type: a.assigned_type,
        author_pseudonym: author_pseudonym(salt, &a.author_id),
        judgments,
        gold_label: a.gold.as_ref().map(|g| g.label),
        posterior: a.gold.as_ref().map(|g| g.posterior),
        entropy_nats: a.gold.as_ref().map(|g| g.entropy_nats),
        license: LICENSE.to_owned(),
    }
}

impl Platform {
    /// Writes the corpus as JSON lines to `out`. The output depends only on
    /// the store contents and the filter.
    pub fn export_corpus(
        &self,
        filter: &ExportFilter,
        out: &mut impl Write,
    ) -> Result<ExportManifest> {
        let snapshot = self.store.snapshot();
        let records = corpus_records(self, &snapshot, filter);
        for r in &records {
            serde_json::to_writer(&mut *out, r).map_err(|e| Error::Io(e.to_string()))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(ExportManifest {
            schema_version: CORPUS_SCHEMA_VERSION,
            license: LICENSE.to_owned(),
            record_count: records.len(),
            language: filter.language.clone(),
            gold_only: filter.gold_only,
            batch_id: latest_batch(&snapshot).map(|b| b.id.clone()),
            aggregation: self.config().aggregation,
            journal_sequence: snapshot.sequence,
            exported_at: self.clock.now(),
        })
    }

    /// Exports to `path` and writes the manifest next to it as
    /// `<path>.manifest.json`. Returns the manifest path.
    pub fn export_corpus_to(
        &self,
        filter: &ExportFilter,
        path: &Path,
    ) -> Result<(ExportManifest, PathBuf)> {
        let mut out = BufWriter::new(File::create(path)?);
        let manifest = self.export_corpus(filter, &mut out)?;
        let mut manifest_path = path.as_os_str().to_owned();
        manifest_path.push(".manifest.json");
        let manifest_path = PathBuf::from(manifest_path);
        let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(&manifest_path, json + "\n")?;
        Ok((manifest, manifest_path))
    }
}

/// Reads and validates an exported corpus.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let record: CorpusRecord =
            serde_json::from_str(&line).map_err(|e| Error::Io(format!("line {}: {e}", n + 1)))?;
        record
            .validate()
            .map_err(|e| Error::Io(format!("line {}: {e}", n + 1)))?;
        records.push(record);
    }
    Ok(records)
}
