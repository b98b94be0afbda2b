//! Synthetic crowds drawn from the same generative model the EM fits.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AggregationError, JudgmentMatrix};
use crate::domain::{check_distribution, FallacyLabel, LABEL_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedRater {
    pub theta: f64,
    pub xi: [f64; LABEL_COUNT],
}

impl SimulatedRater {
    pub fn uniform(theta: f64) -> Self {
        SimulatedRater {
            theta,
            xi: [1.0 / LABEL_COUNT as f64; LABEL_COUNT],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrowdSpec {
    pub n_items: usize,
    pub raters: Vec<SimulatedRater>,
    pub votes_per_item: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedCrowd {
    pub matrix: JudgmentMatrix,
    pub truth: Vec<FallacyLabel>,
}

fn draw(rng: &mut ChaCha8Rng, dist: &[f64; LABEL_COUNT]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left u above the cumulative sum; take the last label with mass
    dist.iter()
        .rposition(|p| *p > 0.0)
        .unwrap_or(LABEL_COUNT - 1)
}

/// Samples true labels uniformly, then `votes_per_item` distinct raters per
/// item, each copying the truth with probability `theta` or drawing from
/// `xi`. Items are named `item-0000`, raters `rater-00`.
pub fn simulate_crowd(spec: &CrowdSpec) -> Result<SimulatedCrowd, AggregationError> {
    if spec.n_items == 0 {
        return Err(AggregationError::InvalidSpec(
            "n_items must be positive".into(),
        ));
    }
    if spec.votes_per_item == 0 || spec.votes_per_item > spec.raters.len() {
        return Err(AggregationError::InvalidSpec(format!(
            "votes_per_item must be in 1..={}",
            spec.raters.len()
        )));
    }
    for (j, r) in spec.raters.iter().enumerate() {
        if !(0.0..=1.0).contains(&r.theta) {
            return Err(AggregationError::InvalidSpec(format!(
                "rater {j} theta {} outside [0, 1]",
                r.theta
            )));
        }
        check_distribution(&r.xi)
            .map_err(|e| AggregationError::InvalidSpec(format!("rater {j} xi: {e}")))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let rater_names: Vec<String> = (0..spec.raters.len())
        .map(|j| format!("rater-{j:02}"))
        .collect();
    let mut matrix = JudgmentMatrix::new("sim");
    let mut truth = Vec::with_capacity(spec.n_items);
    for i in 0..spec.n_items {
        let t = rng.random_range(0..LABEL_COUNT);
        truth.push(FallacyLabel::ALL[t]);
        let item = format!("item-{i:04}");
        let mut chosen = index::sample(&mut rng, spec.raters.len(), spec.votes_per_item).into_vec();
        chosen.sort_unstable();
        for j in chosen {
            let rater = &spec.raters[j];
            let label = if rng.random::<f64>() < rater.theta {
                t
            } else {
                draw(&mut rng, &rater.xi)
            };
            matrix.push(&item, &rater_names[j], FallacyLabel::ALL[label])?;
        }
    }
    Ok(SimulatedCrowd { matrix, truth })
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[FallacyLabel], truth: &[FallacyLabel]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Accuracy over a subset of item indices.
pub fn accuracy_on(predicted: &[FallacyLabel], truth: &[FallacyLabel], items: &[usize]) -> f64 {
    if items.is_empty() {
        return 0.0;
    }
    let hits = items.iter().filter(|&&i| predicted[i] == truth[i]).count();
    hits as f64 / items.len() as f64
}

/// The crowd used for the recovery benchmark: six reliable raters
/// (`theta = 0.9`, uniform `xi`) and four spammers (`theta = 0.1`), each
/// spammer putting 0.75 of its mass on one favourite label.
pub fn benchmark_crowd(seed: u64) -> CrowdSpec {
    let mut raters = vec![SimulatedRater::uniform(0.9); 6];
    for favourite in 0..4 {
        let mut xi = [0.05; LABEL_COUNT];
        xi[favourite] = 0.75;
        raters.push(SimulatedRater { theta: 0.1, xi });
    }
    CrowdSpec {
        n_items: 200,
        raters,
        votes_per_item: 5,
        rng_seed: seed,
    }
}
