use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{run_em, AggregationConfig, AggregationError, JudgmentMatrix, RaterCompetence};
use crate::domain::{
    Argument, ArgumentId, ArgumentStatus, BatchId, FallacyLabel, GoldAssignment, Judgment,
    LABEL_COUNT,
};
use crate::store::Keyed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub argument_id: ArgumentId,
    pub language: String,
    pub votes: usize,
    pub posterior: [f64; LABEL_COUNT],
    pub entropy_nats: f64,
    /// Set when `entropy_nats` is within the threshold.
    pub gold: Option<FallacyLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRun {
    pub language: String,
    pub items: usize,
    pub log_marginal_likelihood: f64,
    pub best_restart: u32,
    pub raters: Vec<RaterCompetence>,
}

/// Immutable record of one aggregation run over a store snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldBatch {
    pub id: BatchId,
    pub created_at: DateTime<Utc>,
    pub config: AggregationConfig,
    pub items: Vec<BatchItem>,
    pub languages: Vec<LanguageRun>,
}

impl Keyed for GoldBatch {
    fn key(&self) -> String {
        self.id.0.clone()
    }
}

impl GoldBatch {
    pub fn assignment(&self, item: &BatchItem) -> Option<GoldAssignment> {
        item.gold.map(|label| GoldAssignment {
            label,
            posterior: item.posterior,
            entropy_nats: item.entropy_nats,
            batch_id: self.id.clone(),
        })
    }

    pub fn gold_count(&self) -> usize {
        self.items.iter().filter(|i| i.gold.is_some()).count()
    }

    pub fn mean_entropy(&self) -> f64 {
        if self.items.is_empty() {
            return 0.0;
        }
        self.items.iter().map(|i| i.entropy_nats).sum::<f64>() / self.items.len() as f64
    }
}

/// Builds one matrix per language from every non-removed argument with at
/// least `min_votes` human judgments, fits the model on each, and marks as
/// gold exactly the items whose posterior entropy is within the threshold.
pub fn estimate_gold<'a>(
    arguments: impl IntoIterator<Item = &'a Argument>,
    judgments: impl IntoIterator<Item = &'a Judgment>,
    config: &AggregationConfig,
    batch_id: BatchId,
    created_at: DateTime<Utc>,
) -> Result<GoldBatch, AggregationError> {
    let eligible: BTreeMap<&ArgumentId, &Argument> = arguments
        .into_iter()
        .filter(|a| a.status != ArgumentStatus::Removed)
        .map(|a| (&a.id, a))
        .collect();
    let mut votes: BTreeMap<&ArgumentId, Vec<&Judgment>> = BTreeMap::new();
    for j in judgments {
        if j.rater_id.is_human() && eligible.contains_key(&j.item_id) {
            votes.entry(&j.item_id).or_default().push(j);
        }
    }

    let mut pools: BTreeMap<&str, JudgmentMatrix> = BTreeMap::new();
    let mut vote_counts: BTreeMap<&ArgumentId, usize> = BTreeMap::new();
    for (item, mut js) in votes {
        if js.len() < config.min_votes as usize {
            continue;
        }
        js.sort_by(|a, b| a.rater_id.cmp(&b.rater_id));
        let language = eligible[item].language.as_str();
        let matrix = pools
            .entry(language)
            .or_insert_with(|| JudgmentMatrix::new(language));
        for j in &js {
            matrix.push(item.as_str(), j.rater_id.as_str(), j.label)?;
        }
        vote_counts.insert(item, js.len());
    }

    let mut items = Vec::new();
    let mut languages = Vec::new();
    for (language, matrix) in pools {
        let result = run_em(&matrix, &config.em)?;
        for posterior in &result.items {
            let id = ArgumentId::new(posterior.item.clone());
            let gold = (posterior.entropy_nats <= config.entropy_threshold_nats)
                .then(|| posterior.label());
            items.push(BatchItem {
                votes: vote_counts[&id],
                argument_id: id,
                language: language.to_owned(),
                posterior: posterior.posterior,
                entropy_nats: posterior.entropy_nats,
                gold,
            });
        }
        languages.push(LanguageRun {
            language: language.to_owned(),
            items: result.items.len(),
            log_marginal_likelihood: result.log_marginal_likelihood,
            best_restart: result.best_restart,
            raters: result.raters,
        });
    }
    items.sort_by(|a, b| a.argument_id.cmp(&b.argument_id));
    Ok(GoldBatch {
        id: batch_id,
        created_at,
        config: *config,
        items,
        languages,
    })
}
