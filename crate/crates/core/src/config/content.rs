use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{schema, ConfigError};
use crate::domain::{ArgumentId, FallacyLabel, Topic, TopicId};

pub const CONTENT_PACK_VERSION: u32 = 1;

/// Seed argument shipped with a content pack. Seeds have no human author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedArgument {
    pub id: ArgumentId,
    pub topic_id: TopicId,
    pub text: String,
    pub assigned_type: FallacyLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentPack {
    pub version: u32,
    pub language: String,
    pub topics: Vec<Topic>,
    #[serde(default)]
    pub seed_arguments: Vec<SeedArgument>,
    /// Educational text per label, shown with write assignments and hard
    /// feedback.
    #[serde(default)]
    pub fallacy_descriptions: BTreeMap<FallacyLabel, String>,
    /// Cue words per label used by the PvP bot to guess.
    #[serde(default)]
    pub bot_lexicon: BTreeMap<FallacyLabel, Vec<String>>,
}

impl ContentPack {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONTENT_PACK_VERSION {
            return Err(schema(format!(
                "unsupported content pack version {}",
                self.version
            )));
        }
        let mut topic_ids = HashSet::new();
        for topic in &self.topics {
            if topic.title.trim().is_empty() {
                return Err(schema(format!("topic {} has an empty title", topic.id)));
            }
            if topic.language != self.language {
                return Err(schema(format!(
                    "topic {} is in {} but the pack is {}",
                    topic.id, topic.language, self.language
                )));
            }
            if !topic_ids.insert(&topic.id) {
                return Err(schema(format!("duplicate topic id {}", topic.id)));
            }
        }
        let mut seed_ids = HashSet::new();
        for seed in &self.seed_arguments {
            if !topic_ids.contains(&seed.topic_id) {
                return Err(ConfigError::DanglingTopic {
                    seed: seed.id.to_string(),
                    topic: seed.topic_id.to_string(),
                });
            }
            if !seed_ids.insert(&seed.id) {
                return Err(schema(format!("duplicate seed id {}", seed.id)));
            }
        }
        Ok(())
    }

    pub fn topic(&self, id: &TopicId) -> Option<&Topic> {
        self.topics.iter().find(|t| &t.id == id)
    }
}

pub fn parse_content_pack(json: &str) -> Result<ContentPack, ConfigError> {
    let pack: ContentPack = serde_json::from_str(json).map_err(ConfigError::from_json)?;
    pack.validate()?;
    Ok(pack)
}

pub fn load_content_pack(path: &Path) -> Result<ContentPack, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
    parse_content_pack(&text)
}

pub(crate) fn json_files(dir: &Path) -> Result<Vec<PathBuf>, ConfigError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| ConfigError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads every `*.json` pack of a directory, keyed by language.
pub fn load_content_dir(dir: &Path) -> Result<BTreeMap<String, ContentPack>, ConfigError> {
    let mut packs = BTreeMap::new();
    for path in json_files(dir)? {
        let pack = load_content_pack(&path)?;
        if packs.contains_key(&pack.language) {
            return Err(schema(format!("two content packs for {}", pack.language)));
        }
        packs.insert(pack.language.clone(), pack);
    }
    Ok(packs)
}
