use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::Serialize;

use super::ConfigError;

/// Language every lookup falls back to.
pub const FALLBACK_LANGUAGE: &str = "en";

/// Flat key → text map for one UI language. The language is taken from the
/// file stem (`de.json` → `de`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocaleBundle {
    pub language: String,
    pub entries: BTreeMap<String, String>,
}

struct StrictEntries(BTreeMap<String, String>);

impl<'de> serde::Deserialize<'de> for StrictEntries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntriesVisitor;

        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = StrictEntries;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a flat object of string keys to string texts")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<StrictEntries, A::Error> {
                let mut entries = BTreeMap::new();
                while let Some((key, value)) = map.next_entry::<String, String>()? {
                    if entries.contains_key(&key) {
                        return Err(de::Error::custom(format_args!("duplicate key `{key}`")));
                    }
                    entries.insert(key, value);
                }
                Ok(StrictEntries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor)
    }
}

pub fn parse_locale(language: &str, json: &str) -> Result<LocaleBundle, ConfigError> {
    match serde_json::from_str::<StrictEntries>(json) {
        Ok(StrictEntries(entries)) => Ok(LocaleBundle {
            language: language.to_owned(),
            entries,
        }),
        Err(e) => {
            let msg = e.to_string();
            if let Some(rest) = msg.strip_prefix("duplicate key `") {
                let key = rest.split('`').next().unwrap_or_default();
                Err(ConfigError::DuplicateKey(key.to_owned()))
            } else {
                Err(ConfigError::from_json(e))
            }
        }
    }
}

pub fn load_locale(path: &Path) -> Result<LocaleBundle, ConfigError> {
    let language = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| {
        ConfigError::Parse(format!("no language in file name {}", path.display()))
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::io(path, e))?;
    parse_locale(language, &text)
}

/// Loads every `*.json` file of a directory as a bundle.
pub fn load_locale_dir(dir: &Path) -> Result<Locales, ConfigError> {
    let mut bundles = Vec::new();
    for path in super::content::json_files(dir)? {
        bundles.push(load_locale(&path)?);
    }
    Ok(Locales::new(bundles))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Locales {
    bundles: BTreeMap<String, LocaleBundle>,
}

impl Locales {
    pub fn new(bundles: impl IntoIterator<Item = LocaleBundle>) -> Locales {
        Locales {
            bundles: bundles
                .into_iter()
                .map(|b| (b.language.clone(), b))
                .collect(),
        }
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.bundles.keys().map(String::as_str)
    }

    pub fn has_language(&self, language: &str) -> bool {
        self.bundles.contains_key(language)
    }

    pub fn bundle(&self, language: &str) -> Option<&LocaleBundle> {
        self.bundles.get(language)
    }

    /// Text for `key` in `language`, falling back to English.
    pub fn resolve(&self, language: &str, key: &str) -> Option<&str> {
        self.bundles
            .get(language)
            .and_then(|b| b.entries.get(key))
            .or_else(|| {
                self.bundles
                    .get(FALLBACK_LANGUAGE)
                    .and_then(|b| b.entries.get(key))
            })
            .map(String::as_str)
    }

    /// Fails on the first key missing from some bundle. The English fallback
    /// is for runtime lookups only; shipped bundles must be complete.
    pub fn check_coverage<'a>(
        &self,
        keys: impl IntoIterator<Item = &'a str>,
    ) -> Result<(), ConfigError> {
        if !self.has_language(FALLBACK_LANGUAGE) {
            return Err(ConfigError::DanglingReference(format!(
                "fallback locale {FALLBACK_LANGUAGE} is missing"
            )));
        }
        for key in keys {
            for language in self.bundles.keys() {
                if !self.bundles[language].entries.contains_key(key) {
                    return Err(ConfigError::DanglingReference(format!(
                        "locale key {key} is missing from {language}"
                    )));
                }
            }
        }
        Ok(())
    }
}
