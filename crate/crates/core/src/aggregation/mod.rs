//! Gold-label estimation from crowd judgments.

mod gold;
mod mace;
mod matrix;
mod simulate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{first_argmax, FallacyLabel, LABEL_COUNT};

pub use gold::{estimate_gold, BatchItem, GoldBatch, LanguageRun};
pub use mace::{
    e_step, initial_params, m_step, posterior_entropy, run_em, run_restart, theta_floor, xi_floor,
    EStep, EmConfig, ItemPosterior, MaceParams, MaceResult, RaterCompetence, RaterParams,
    RestartSummary, RestartTrace,
};
pub use matrix::{JudgmentMatrix, MatrixEntry};
pub use simulate::{
    accuracy, accuracy_on, benchmark_crowd, simulate_crowd, CrowdSpec, SimulatedCrowd,
    SimulatedRater,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("judgment matrix is empty")]
    EmptyMatrix,
    #[error("duplicate judgment for item {item} by rater {rater}")]
    DuplicateEntry { item: String, rater: String },
    #[error("invalid crowd spec: {0}")]
    InvalidSpec(String),
    #[error("invalid em config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationConfig {
    /// Judgments (the author's included) an argument needs before it enters
    /// aggregation.
    pub min_votes: u32,
    /// Maximum posterior entropy, in nats, at which gold is assigned.
    pub entropy_threshold_nats: f64,
    #[serde(default)]
    pub em: EmConfig,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            min_votes: 5,
            entropy_threshold_nats: 0.7,
            em: EmConfig::default(),
        }
    }
}

impl AggregationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_votes < 1 {
            return Err("aggregation.min_votes must be at least 1".into());
        }
        if !(self.entropy_threshold_nats.is_finite() && self.entropy_threshold_nats >= 0.0) {
            return Err("aggregation.entropy_threshold_nats must be non-negative".into());
        }
        self.em.validate()
    }
}

/// Most frequent label per item, ties to the earliest label.
pub fn majority_vote(matrix: &JudgmentMatrix) -> Result<Vec<FallacyLabel>, AggregationError> {
    if matrix.is_empty() {
        return Err(AggregationError::EmptyMatrix);
    }
    let mut counts = vec![[0.0f64; LABEL_COUNT]; matrix.items().len()];
    for e in matrix.entries() {
        counts[e.item][e.label.index()] += 1.0;
    }
    Ok(counts
        .iter()
        .map(|c| FallacyLabel::ALL[first_argmax(c)])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use FallacyLabel::*;

    #[test]
    fn majority_examples() {
        let m = JudgmentMatrix::from_votes(
            "en",
            [
                ("x", "1", RedHerring),
                ("x", "2", RedHerring),
                ("x", "3", AdHominem),
                ("y", "1", RedHerring),
                ("y", "2", AppealToEmotion),
                ("z", "1", NoFallacy),
                ("z", "2", NoFallacy),
            ],
        )
        .unwrap();
        assert_eq!(
            majority_vote(&m).unwrap(),
            vec![RedHerring, AppealToEmotion, NoFallacy]
        );
        assert_eq!(
            majority_vote(&JudgmentMatrix::new("en")),
            Err(AggregationError::EmptyMatrix)
        );
    }
}
