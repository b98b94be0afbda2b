//! Declarative game workflow, locale bundles and per-language content packs.
//!
//! All three are JSON documents. They are validated completely at load time
//! and are immutable afterwards. The formats are documented in
//! `docs/formats.md`.

mod content;
mod locale;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::AggregationConfig;
use crate::domain::{FallacyLabel, LevelId, RoundId, TextLimits, TopicId, WorldId};

pub use content::{
    load_content_dir, load_content_pack, parse_content_pack, ContentPack, SeedArgument,
};
pub use locale::{
    load_locale, load_locale_dir, parse_locale, LocaleBundle, Locales, FALLBACK_LANGUAGE,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("cyclic world unlock chain through {0}")]
    CyclicUnlock(String),
    #[error("duplicate locale key {0}")]
    DuplicateKey(String),
    #[error("seed argument {seed} references unknown topic {topic}")]
    DanglingTopic { seed: String, topic: String },
    #[error("i/o error reading {path}: {message}")]
    Io { path: String, message: String },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Parse(_) => "parse_error",
            ConfigError::SchemaViolation(_) => "schema_violation",
            ConfigError::DanglingReference(_) => "dangling_reference",
            ConfigError::CyclicUnlock(_) => "cyclic_unlock",
            ConfigError::DuplicateKey(_) => "duplicate_key",
            ConfigError::DanglingTopic { .. } => "dangling_topic",
            ConfigError::Io { .. } => "io_error",
        }
    }

    pub(crate) fn from_json(e: serde_json::Error) -> ConfigError {
        use serde_json::error::Category;
        match e.classify() {
            Category::Data => ConfigError::SchemaViolation(e.to_string()),
            _ => ConfigError::Parse(e.to_string()),
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> ConfigError {
        ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

fn schema(msg: impl Into<String>) -> ConfigError {
    ConfigError::SchemaViolation(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoringTable {
    pub soft_feedback_points: u64,
    pub hard_correct_points: u64,
    pub hard_wrong_points: u64,
    pub write_submit_points: u64,
    pub deferred_author_bonus: u64,
    pub pvp_guess_points: u64,
}

impl Default for ScoringTable {
    fn default() -> Self {
        ScoringTable {
            soft_feedback_points: 1,
            hard_correct_points: 3,
            hard_wrong_points: 0,
            write_submit_points: 1,
            deferred_author_bonus: 2,
            pvp_guess_points: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvpConfig {
    /// Number of arguments each player writes in one match.
    pub exchanges_per_player: u32,
}

impl Default for PvpConfig {
    fn default() -> Self {
        PvpConfig {
            exchanges_per_player: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    WriteFallacy,
    RecognizeFallacy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundConfig {
    pub id: RoundId,
    pub kind: RoundKind,
    /// Labels offered as answers. Required for recognition rounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<FallacyLabel>>,
    /// Pins a write round to one topic instead of sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<TopicId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub id: LevelId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_key: Option<String>,
    /// Ids into the top-level round library; a round may appear in several
    /// levels.
    pub rounds: Vec<RoundId>,
    pub fallacy_subset: Vec<FallacyLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldKind {
    #[default]
    Campaign,
    Pvp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    pub id: WorldId,
    pub title_key: String,
    pub theme: String,
    #[serde(default)]
    pub kind: WorldKind,
    #[serde(default)]
    pub levels: Vec<LevelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlock_requires: Option<WorldId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub version: u32,
    #[serde(default)]
    pub text_limits: TextLimits,
    #[serde(default)]
    pub scoring: ScoringTable,
    #[serde(default)]
    pub aggregation: AggregationConfig,
    #[serde(default)]
    pub pvp: PvpConfig,
    pub rounds: Vec<RoundConfig>,
    pub worlds: Vec<WorldConfig>,
}

/// Reads and validates a game config file.
pub fn load_game_config(path: &Path) -> Result<GameConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
    parse_game_config(&text)
}

pub fn parse_game_config(json: &str) -> Result<GameConfig, ConfigError> {
    let config: GameConfig = serde_json::from_str(json).map_err(ConfigError::from_json)?;
    config.validate()?;
    Ok(config)
}

fn unique<'a, T: Eq + std::hash::Hash + std::fmt::Display + 'a>(
    what: &str,
    items: impl IntoIterator<Item = &'a T>,
) -> Result<(), ConfigError> {
    let mut seen = HashSet::new();
    for item in items {
        if !seen.insert(item) {
            return Err(schema(format!("duplicate {what} {item}")));
        }
    }
    Ok(())
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.version != CONFIG_VERSION {
            return Err(schema(format!(
                "unsupported version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if self.text_limits.min_chars == 0
            || self.text_limits.min_chars > self.text_limits.max_chars
        {
            return Err(schema(
                "text_limits must satisfy 1 <= min_chars <= max_chars",
            ));
        }
        self.aggregation.validate().map_err(schema)?;
        if self.pvp.exchanges_per_player == 0 {
            return Err(schema("pvp.exchanges_per_player must be positive"));
        }

        unique("round id", self.rounds.iter().map(|r| &r.id))?;
        unique("world id", self.worlds.iter().map(|w| &w.id))?;
        unique(
            "level id",
            self.worlds
                .iter()
                .flat_map(|w| w.levels.iter().map(|l| &l.id)),
        )?;

        for round in &self.rounds {
            match round.kind {
                RoundKind::RecognizeFallacy => {
                    let candidates = round.candidates.as_ref().ok_or_else(|| {
                        schema(format!("recognition round {} lacks candidates", round.id))
                    })?;
                    if candidates.len() < 2 {
                        return Err(schema(format!(
                            "recognition round {} needs at least two candidates",
                            round.id
                        )));
                    }
                    unique("candidate", candidates.iter())?;
                    if round.topic_id.is_some() {
                        return Err(schema(format!(
                            "recognition round {} cannot pin a topic",
                            round.id
                        )));
                    }
                }
                RoundKind::WriteFallacy => {
                    if round.candidates.is_some() {
                        return Err(schema(format!(
                            "write round {} cannot carry candidates",
                            round.id
                        )));
                    }
                }
            }
        }

        if self.worlds.is_empty() {
            return Err(schema("at least one world is required"));
        }
        let world_ids: BTreeSet<&WorldId> = self.worlds.iter().map(|w| &w.id).collect();
        let first = &self.worlds[0];
        if first.kind == WorldKind::Pvp {
            return Err(schema("the first world must be a campaign world"));
        }
        let mut pvp_worlds = 0;
        for world in &self.worlds {
            if let Some(req) = &world.unlock_requires {
                if !world_ids.contains(req) {
                    return Err(ConfigError::DanglingReference(format!(
                        "world {} requires unknown world {req}",
                        world.id
                    )));
                }
            }
            match world.kind {
                WorldKind::Pvp => {
                    pvp_worlds += 1;
                    if world.unlock_requires.as_ref() != Some(&first.id) {
                        return Err(schema(format!(
                            "pvp world {} must be unlocked by the first world {}",
                            world.id, first.id
                        )));
                    }
                    if !world.levels.is_empty() {
                        return Err(schema(format!(
                            "pvp world {} cannot contain levels",
                            world.id
                        )));
                    }
                }
                WorldKind::Campaign => {
                    if world.levels.is_empty() {
                        return Err(schema(format!("world {} has no levels", world.id)));
                    }
                }
            }
            for level in &world.levels {
                self.validate_level(level)?;
            }
        }
        if pvp_worlds > 1 {
            return Err(schema("at most one pvp world is allowed"));
        }
        self.check_unlock_acyclic()
    }

    fn validate_level(&self, level: &LevelConfig) -> Result<(), ConfigError> {
        if level.rounds.is_empty() {
            return Err(schema(format!("level {} has no rounds", level.id)));
        }
        if level.fallacy_subset.is_empty() {
            return Err(schema(format!(
                "level {} has an empty fallacy subset",
                level.id
            )));
        }
        unique("fallacy in subset", level.fallacy_subset.iter())?;
        for round_id in &level.rounds {
            let round = self.round(round_id).ok_or_else(|| {
                ConfigError::DanglingReference(format!(
                    "level {} references unknown round {round_id}",
                    level.id
                ))
            })?;
            if round.kind == RoundKind::WriteFallacy
                && !level.fallacy_subset.iter().any(|l| l.is_fallacy())
            {
                return Err(schema(format!(
                    "level {} has a write round but no fallacy type to assign",
                    level.id
                )));
            }
        }
        Ok(())
    }

    fn check_unlock_acyclic(&self) -> Result<(), ConfigError> {
        let edges: BTreeMap<&WorldId, &WorldId> = self
            .worlds
            .iter()
            .filter_map(|w| w.unlock_requires.as_ref().map(|r| (&w.id, r)))
            .collect();
        for start in edges.keys() {
            let mut current = *start;
            let mut steps = 0;
            while let Some(next) = edges.get(current) {
                steps += 1;
                if *next == *start || steps > self.worlds.len() {
                    return Err(ConfigError::CyclicUnlock(start.to_string()));
                }
                current = next;
            }
        }
        Ok(())
    }

    pub fn round(&self, id: &RoundId) -> Option<&RoundConfig> {
        self.rounds.iter().find(|r| &r.id == id)
    }

    pub fn world(&self, id: &WorldId) -> Option<&WorldConfig> {
        self.worlds.iter().find(|w| &w.id == id)
    }

    /// The level and its enclosing world.
    pub fn level(&self, id: &LevelId) -> Option<(&WorldConfig, &LevelConfig)> {
        self.worlds
            .iter()
            .find_map(|w| w.levels.iter().find(|l| &l.id == id).map(|l| (w, l)))
    }

    pub fn first_world(&self) -> &WorldConfig {
        &self.worlds[0]
    }

    pub fn pvp_world(&self) -> Option<&WorldConfig> {
        self.worlds.iter().find(|w| w.kind == WorldKind::Pvp)
    }

    /// Every locale key this config refers to.
    pub fn locale_keys(&self) -> BTreeSet<String> {
        let mut keys = BTreeSet::new();
        for world in &self.worlds {
            keys.insert(world.title_key.clone());
            for level in &world.levels {
                if let Some(k) = &level.title_key {
                    keys.insert(k.clone());
                }
            }
        }
        keys
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
