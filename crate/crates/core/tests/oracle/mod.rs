//! Brute-force reference for the competence model: sums the joint
//! probability over every truth assignment (and, for tiny instances, every
//! copy/spam indicator) instead of factorizing per item.

#![allow(dead_code)]

use fallax_core::aggregation::{JudgmentMatrix, MaceParams, RaterParams};
use fallax_core::domain::{FallacyLabel, LABEL_COUNT};

/// One vote as (item, rater, label) indices.
pub type Vote = (usize, usize, usize);

#[derive(Debug, Clone)]
pub struct Instance {
    pub items: usize,
    pub raters: usize,
    pub votes: Vec<Vote>,
    pub params: Vec<RaterParams>,
}

#[derive(Debug, Clone)]
pub struct Exact {
    pub posteriors: Vec<[f64; LABEL_COUNT]>,
    pub log_marginal_likelihood: f64,
}

#[derive(Debug, Clone)]
pub struct ExactCounts {
    pub expected_copies: Vec<f64>,
    pub expected_spam: Vec<[f64; LABEL_COUNT]>,
}

fn truths(items: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = LABEL_COUNT.pow(items as u32);
    (0..total).map(move |mut code| {
        let mut t = vec![0; items];
        for slot in t.iter_mut() {
            *slot = code % LABEL_COUNT;
            code /= LABEL_COUNT;
        }
        t
    })
}

fn vote_prob(p: &RaterParams, label: usize, truth: usize) -> f64 {
    let copy = if label == truth { p.theta } else { 0.0 };
    copy + (1.0 - p.theta) * p.xi[label]
}

/// Posterior marginals and log marginal likelihood by enumerating all
/// `6^items` truth assignments.
pub fn exact(inst: &Instance) -> Exact {
    let mut marginals = vec![[0.0; LABEL_COUNT]; inst.items];
    let mut total = 0.0;
    let prior = (1.0 / LABEL_COUNT as f64).powi(inst.items as i32);
    for t in truths(inst.items) {
        let mut w = prior;
        for &(i, j, a) in &inst.votes {
            w *= vote_prob(&inst.params[j], a, t[i]);
        }
        total += w;
        for (i, &ti) in t.iter().enumerate() {
            marginals[i][ti] += w;
        }
    }
    for m in &mut marginals {
        m.iter_mut().for_each(|v| *v /= total);
    }
    Exact {
        posteriors: marginals,
        log_marginal_likelihood: total.ln(),
    }
}

/// Expected copy and spam counts by enumerating truths and every copy/spam
/// indicator vector. Exponential in the vote count; keep instances tiny.
pub fn exact_counts(inst: &Instance) -> ExactCounts {
    let m = inst.votes.len();
    assert!(m <= 10, "indicator enumeration over {m} votes is too large");
    let mut copies = vec![0.0; inst.raters];
    let mut spam = vec![[0.0; LABEL_COUNT]; inst.raters];
    let mut total = 0.0;
    let prior = (1.0 / LABEL_COUNT as f64).powi(inst.items as i32);
    for t in truths(inst.items) {
        for mask in 0u32..(1 << m) {
            let mut w = prior;
            for (e, &(i, j, a)) in inst.votes.iter().enumerate() {
                let p = &inst.params[j];
                w *= if mask & (1 << e) != 0 {
                    (1.0 - p.theta) * p.xi[a]
                } else if a == t[i] {
                    p.theta
                } else {
                    0.0
                };
            }
            if w == 0.0 {
                continue;
            }
            total += w;
            for (e, &(_, j, a)) in inst.votes.iter().enumerate() {
                if mask & (1 << e) != 0 {
                    spam[j][a] += w;
                } else {
                    copies[j] += w;
                }
            }
        }
    }
    copies.iter_mut().for_each(|c| *c /= total);
    spam.iter_mut()
        .for_each(|s| s.iter_mut().for_each(|v| *v /= total));
    ExactCounts {
        expected_copies: copies,
        expected_spam: spam,
    }
}

pub fn item_name(i: usize) -> String {
    format!("i{i}")
}

pub fn rater_name(j: usize) -> String {
    format!("r{j}")
}

/// The instance as a matrix plus parameters in the matrix's rater order,
/// and the matrix index of every instance item.
pub fn to_matrix(inst: &Instance) -> (JudgmentMatrix, MaceParams, Vec<usize>) {
    let mut matrix = JudgmentMatrix::new("oracle");
    for &(i, j, a) in &inst.votes {
        matrix
            .push(&item_name(i), &rater_name(j), FallacyLabel::ALL[a])
            .unwrap();
    }
    let raters = matrix
        .raters()
        .iter()
        .map(|name| inst.params[name[1..].parse::<usize>().unwrap()])
        .collect();
    let item_index = (0..inst.items)
        .map(|i| {
            matrix
                .items()
                .iter()
                .position(|n| *n == item_name(i))
                .unwrap()
        })
        .collect();
    (matrix, MaceParams { raters }, item_index)
}

/// Deterministic instance generator for sweeps outside proptest.
pub fn instance_from_seed(seed: u64, max_items: usize, max_raters: usize) -> Instance {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let items = rng.random_range(1..=max_items);
    let raters = rng.random_range(1..=max_raters);
    let mut votes = Vec::new();
    for i in 0..items {
        for j in 0..raters {
            if rng.random_bool(0.7) {
                votes.push((i, j, rng.random_range(0..LABEL_COUNT)));
            }
        }
        if !votes.iter().any(|v| v.0 == i) {
            votes.push((
                i,
                rng.random_range(0..raters),
                rng.random_range(0..LABEL_COUNT),
            ));
        }
    }
    let params = (0..raters)
        .map(|_| {
            let theta = rng.random_range(0.01..0.99);
            let mut xi = [0.0; LABEL_COUNT];
            for x in xi.iter_mut() {
                *x = rng.random_range(0.01..1.0);
            }
            let s: f64 = xi.iter().sum();
            xi.iter_mut().for_each(|x| *x /= s);
            RaterParams { theta, xi }
        })
        .collect();
    Instance {
        items,
        raters,
        votes,
        params,
    }
}
