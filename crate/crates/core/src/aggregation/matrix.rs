use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::AggregationError;
use crate::domain::FallacyLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub item: usize,
    pub rater: usize,
    pub label: FallacyLabel,
}

/// Sparse item × rater table of labels for one language pool. Items and
/// raters are indexed in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JudgmentMatrix {
    pub language: String,
    items: Vec<String>,
    raters: Vec<String>,
    entries: Vec<MatrixEntry>,
    #[serde(skip)]
    item_index: HashMap<String, usize>,
    #[serde(skip)]
    rater_index: HashMap<String, usize>,
    #[serde(skip)]
    pairs: HashSet<(usize, usize)>,
}

impl JudgmentMatrix {
    pub fn new(language: impl Into<String>) -> Self {
        JudgmentMatrix {
            language: language.into(),
            ..Default::default()
        }
    }

    /// Adds one vote. An item or rater exists in the matrix only once it has
    /// a vote, so every item has at least one entry.
    pub fn push(
        &mut self,
        item: &str,
        rater: &str,
        label: FallacyLabel,
    ) -> Result<(), AggregationError> {
        let item_idx = intern(&mut self.items, &mut self.item_index, item);
        let rater_idx = intern(&mut self.raters, &mut self.rater_index, rater);
        if !self.pairs.insert((item_idx, rater_idx)) {
            return Err(AggregationError::DuplicateEntry {
                item: item.to_owned(),
                rater: rater.to_owned(),
            });
        }
        self.entries.push(MatrixEntry {
            item: item_idx,
            rater: rater_idx,
            label,
        });
        Ok(())
    }

    pub fn from_votes<'a>(
        language: &str,
        votes: impl IntoIterator<Item = (&'a str, &'a str, FallacyLabel)>,
    ) -> Result<Self, AggregationError> {
        let mut m = JudgmentMatrix::new(language);
        for (item, rater, label) in votes {
            m.push(item, rater, label)?;
        }
        Ok(m)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn entries(&self) -> &[MatrixEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn item_id(&self, idx: usize) -> &str {
        &self.items[idx]
    }

    /// `(rater, label index)` pairs per item.
    pub fn by_item(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.items.len()];
        for e in &self.entries {
            out[e.item].push((e.rater, e.label.index()));
        }
        out
    }

    /// A copy with every label mapped through `perm` (label index → index).
    pub fn relabeled(&self, perm: &[usize; crate::domain::LABEL_COUNT]) -> JudgmentMatrix {
        let mut m = JudgmentMatrix::new(self.language.clone());
        for e in &self.entries {
            let label = FallacyLabel::from_index(perm[e.label.index()]).expect("valid permutation");
            m.push(&self.items[e.item], &self.raters[e.rater], label)
                .expect("source matrix has unique pairs");
        }
        m
    }
}

fn intern(names: &mut Vec<String>, index: &mut HashMap<String, usize>, name: &str) -> usize {
    if let Some(i) = index.get(name) {
        return *i;
    }
    names.push(name.to_owned());
    index.insert(name.to_owned(), names.len() - 1);
    names.len() - 1
}
