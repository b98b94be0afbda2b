//! The assembled platform: validated content, the store, a clock and the
//! server RNG. Gameplay, PvP, moderation and account operations are
//! implemented as `impl Platform` blocks in their own modules.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clock::Clock;
use crate::config::{
    load_content_dir, load_game_config, load_locale_dir, ConfigError, ContentPack, GameConfig,
    Locales,
};
use crate::domain::{
    validate_argument_text, Argument, ArgumentId, ArgumentStatus, FallacyLabel, Topic, TopicId,
    UserId,
};
use crate::engine::{SOFT_FEEDBACK_KEY, WRITE_FEEDBACK_KEY};
use crate::error::Result;
use crate::export::SALT_COUNTER;
use crate::store::{Counter, Store, StoreError};

/// Game config, locales and content packs, cross-validated.
#[derive(Debug, Clone)]
pub struct Catalog {
    pub config: GameConfig,
    pub locales: Locales,
    pub packs: BTreeMap<String, ContentPack>,
}

fn dangling(msg: String) -> ConfigError {
    ConfigError::DanglingReference(msg)
}

impl Catalog {
    pub fn new(
        config: GameConfig,
        locales: Locales,
        packs: BTreeMap<String, ContentPack>,
    ) -> Result<Catalog, ConfigError> {
        config.validate()?;
        if packs.is_empty() {
            return Err(ConfigError::SchemaViolation("no content packs".into()));
        }
        let mut topic_ids = HashSet::new();
        let mut seed_ids = HashSet::new();
        for pack in packs.values() {
            pack.validate()?;
            if !locales.has_language(&pack.language) {
                return Err(dangling(format!(
                    "content pack language {} has no locale bundle",
                    pack.language
                )));
            }
            for topic in &pack.topics {
                if !topic_ids.insert(topic.id.clone()) {
                    return Err(ConfigError::SchemaViolation(format!(
                        "topic id {} used in two packs",
                        topic.id
                    )));
                }
            }
            for seed in &pack.seed_arguments {
                if seed.id.as_str().starts_with("arg-") || !seed_ids.insert(seed.id.clone()) {
                    return Err(ConfigError::SchemaViolation(format!(
                        "seed id {} is reserved or used twice",
                        seed.id
                    )));
                }
                validate_argument_text(&seed.text, config.text_limits)
                    .map_err(|e| ConfigError::SchemaViolation(format!("seed {}: {e}", seed.id)))?;
            }
        }
        for round in &config.rounds {
            if let Some(topic) = &round.topic_id {
                if !topic_ids.contains(topic) {
                    return Err(dangling(format!(
                        "round {} pins unknown topic {topic}",
                        round.id
                    )));
                }
            }
        }
        let mut keys = config.locale_keys();
        keys.insert(SOFT_FEEDBACK_KEY.to_owned());
        keys.insert(WRITE_FEEDBACK_KEY.to_owned());
        for label in FallacyLabel::ALL {
            keys.insert(label.name_key());
            keys.insert(label.explanation_key());
        }
        locales.check_coverage(keys.iter().map(String::as_str))?;
        Ok(Catalog {
            config,
            locales,
            packs,
        })
    }

    /// Loads `game.json`-style config plus content and locale directories.
    pub fn load(
        config: &Path,
        content_dir: &Path,
        locale_dir: &Path,
    ) -> Result<Catalog, ConfigError> {
        Catalog::new(
            load_game_config(config)?,
            load_locale_dir(locale_dir)?,
            load_content_dir(content_dir)?,
        )
    }

    pub fn pack(&self, language: &str) -> Option<&ContentPack> {
        self.packs.get(language)
    }

    pub fn topic(&self, id: &TopicId) -> Option<&Topic> {
        self.packs.values().find_map(|p| p.topic(id))
    }

    pub fn description(&self, language: &str, label: FallacyLabel) -> Option<&str> {
        self.pack(language)
            .and_then(|p| p.fallacy_descriptions.get(&label))
            .map(String::as_str)
    }
}

pub struct Platform {
    pub catalog: Arc<Catalog>,
    pub store: Arc<Store>,
    pub clock: Arc<dyn Clock>,
    rng: Mutex<ChaCha8Rng>,
}

impl Platform {
    /// Assembles the platform and makes sure every content-pack seed
    /// argument and the export salt exist in the store.
    pub fn new(
        catalog: Catalog,
        store: Arc<Store>,
        clock: Arc<dyn Clock>,
        seed: u64,
    ) -> Result<Platform> {
        let platform = Platform {
            catalog: Arc::new(catalog),
            store,
            clock,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
        };
        platform.install_seeds()?;
        Ok(platform)
    }

    pub fn config(&self) -> &GameConfig {
        &self.catalog.config
    }

    pub(crate) fn with_rng<T>(&self, f: impl FnOnce(&mut ChaCha8Rng) -> T) -> T {
        f(&mut self.rng.lock().unwrap())
    }

    fn install_seeds(&self) -> Result<()> {
        let now = self.clock.now();
        self.store.transact(|tx| {
            if tx.get::<Counter>(SALT_COUNTER).is_none() {
                tx.put(Counter {
                    name: SALT_COUNTER.to_owned(),
                    value: rand::rng().random(),
                });
            }
            for pack in self.catalog.packs.values() {
                for seed in &pack.seed_arguments {
                    if tx.get::<Argument>(seed.id.as_str()).is_some() {
                        continue;
                    }
                    tx.put(Argument {
                        id: seed.id.clone(),
                        author_id: UserId::seed(),
                        topic_id: seed.topic_id.clone(),
                        language: pack.language.clone(),
                        text: seed.text.clone(),
                        assigned_type: seed.assigned_type,
                        created_at: now,
                        status: ArgumentStatus::Active,
                        gold: None,
                    });
                }
            }
            Ok::<_, StoreError>(())
        })?;
        Ok(())
    }

    pub fn argument(&self, id: &ArgumentId) -> Option<Argument> {
        self.store.get::<Argument>(id.as_str())
    }
}
