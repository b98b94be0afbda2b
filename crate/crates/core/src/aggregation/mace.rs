//! Annotator-competence model fitted by expectation maximization.
//!
//! Generative story per item `i`: the true label `T_i` is uniform over the
//! label space. Rater `j` copies it with probability `theta_j`, otherwise
//! draws a label from its own spamming distribution `xi_j`, independently for
//! every judgment. EM alternates the posterior over true labels (E-step) with
//! re-estimation of `theta` and `xi` from expected copy/spam counts (M-step).
//! Several randomly initialised restarts are run and the one with the
//! highest log marginal likelihood is kept.
//!
//! The M-step maximizes the expected complete-data log likelihood inside a
//! fixed box derived from `smoothing_delta`: for a rater with `n` judgments,
//! `theta` stays in `[d / (n + 2d), 1 - d / (n + 2d)]` and every `xi_k` stays
//! at or above `d / (n + 6d)`. These are the floors plain additive smoothing
//! would impose on zero counts. Because the box does not move between
//! iterations and the update is the exact maximizer within it, every step is
//! a generalized EM step and the log marginal likelihood never decreases.
//! (Additive smoothing itself is a MAP update and can lower it.)

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AggregationError, JudgmentMatrix};
use crate::domain::{
    check_distribution, first_argmax, DistributionError, FallacyLabel, LABEL_COUNT,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmConfig {
    pub restarts: u32,
    pub max_iterations: u32,
    pub smoothing_delta: f64,
    pub convergence_epsilon: f64,
    pub rng_seed: u64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            restarts: 10,
            max_iterations: 50,
            smoothing_delta: 0.1,
            convergence_epsilon: 1e-6,
            rng_seed: 0,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.restarts == 0 {
            return Err("em.restarts must be positive".into());
        }
        if self.max_iterations == 0 {
            return Err("em.max_iterations must be positive".into());
        }
        if !(self.smoothing_delta.is_finite() && self.smoothing_delta > 0.0) {
            return Err("em.smoothing_delta must be positive".into());
        }
        if !(self.convergence_epsilon.is_finite() && self.convergence_epsilon > 0.0) {
            return Err("em.convergence_epsilon must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaterParams {
    pub theta: f64,
    pub xi: [f64; LABEL_COUNT],
}

/// Parameters for every rater of a matrix, aligned with `matrix.raters()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaceParams {
    pub raters: Vec<RaterParams>,
}

impl MaceParams {
    pub fn uniform(n_raters: usize, theta: f64) -> Self {
        MaceParams {
            raters: vec![
                RaterParams {
                    theta,
                    xi: [1.0 / LABEL_COUNT as f64; LABEL_COUNT],
                };
                n_raters
            ],
        }
    }
}

/// Lower bound of `theta` (and of `1 - theta`) for a rater with `n` judgments.
pub fn theta_floor(n: f64, delta: f64) -> f64 {
    delta / (n + 2.0 * delta)
}

/// Lower bound of every `xi_k` for a rater with `n` judgments.
pub fn xi_floor(n: f64, delta: f64) -> f64 {
    delta / (n + LABEL_COUNT as f64 * delta)
}

/// Maximizes `sum_k weights_k ln x_k` over the simplex with `x_k >= floor`.
/// Requires `floor * LABEL_COUNT <= 1`. Zero weights give the floor (or the
/// uniform distribution when every weight is zero).
fn water_fill(weights: &[f64; LABEL_COUNT], floor: f64) -> [f64; LABEL_COUNT] {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return [1.0 / LABEL_COUNT as f64; LABEL_COUNT];
    }
    let mut clamped = [false; LABEL_COUNT];
    loop {
        let free_mass = 1.0 - floor * clamped.iter().filter(|c| **c).count() as f64;
        let free_weight: f64 = weights
            .iter()
            .zip(&clamped)
            .filter(|(_, c)| !**c)
            .map(|(w, _)| w)
            .sum();
        let scale = free_mass / free_weight;
        let mut changed = false;
        for k in 0..LABEL_COUNT {
            if !clamped[k] && weights[k] * scale < floor {
                clamped[k] = true;
                changed = true;
            }
        }
        if !changed {
            let mut x = [0.0; LABEL_COUNT];
            for k in 0..LABEL_COUNT {
                x[k] = if clamped[k] {
                    floor
                } else {
                    weights[k] * scale
                };
            }
            return x;
        }
    }
}

/// Moves parameters into the box the M-step maximizes over.
fn project(params: &mut MaceParams, judgments: &[f64], delta: f64) {
    for (r, &n) in params.raters.iter_mut().zip(judgments) {
        let f = theta_floor(n, delta);
        r.theta = r.theta.clamp(f, 1.0 - f);
        r.xi = water_fill(&r.xi, xi_floor(n, delta));
    }
}

/// Output of one E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct EStep {
    pub posteriors: Vec<[f64; LABEL_COUNT]>,
    pub log_marginal_likelihood: f64,
    /// Expected number of copied judgments per rater.
    pub expected_copies: Vec<f64>,
    /// Expected spam judgments per rater and label.
    pub expected_spam: Vec<[f64; LABEL_COUNT]>,
}

fn log_sum_exp(values: &[f64; LABEL_COUNT]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Posterior over true labels for fixed parameters, with the expected
/// copy/spam counts the M-step needs.
pub fn e_step(matrix: &JudgmentMatrix, params: &MaceParams) -> EStep {
    e_step_indexed(&matrix.by_item(), params)
}

fn e_step_indexed(by_item: &[Vec<(usize, usize)>], params: &MaceParams) -> EStep {
    let n_raters = params.raters.len();
    let mut posteriors = Vec::with_capacity(by_item.len());
    let mut expected_copies = vec![0.0; n_raters];
    let mut expected_spam = vec![[0.0; LABEL_COUNT]; n_raters];
    let log_prior_t = -(LABEL_COUNT as f64).ln();
    let mut ll = 0.0;

    for votes in by_item {
        let mut log_joint = [log_prior_t; LABEL_COUNT];
        for &(rater, label) in votes {
            let p = &params.raters[rater];
            let spam = (1.0 - p.theta) * p.xi[label];
            for (t, lj) in log_joint.iter_mut().enumerate() {
                let term = if t == label { p.theta + spam } else { spam };
                *lj += term.ln();
            }
        }
        let log_evidence = log_sum_exp(&log_joint);
        let mut posterior = [0.0; LABEL_COUNT];
        if log_evidence == f64::NEG_INFINITY {
            posterior = [1.0 / LABEL_COUNT as f64; LABEL_COUNT];
        } else {
            for (p, lj) in posterior.iter_mut().zip(log_joint.iter()) {
                *p = (lj - log_evidence).exp();
            }
            let sum: f64 = posterior.iter().sum();
            posterior.iter_mut().for_each(|p| *p /= sum);
        }
        ll += log_evidence;

        for &(rater, label) in votes {
            let p = &params.raters[rater];
            let denom = p.theta + (1.0 - p.theta) * p.xi[label];
            let copy = if denom > 0.0 {
                posterior[label] * p.theta / denom
            } else {
                0.0
            };
            expected_copies[rater] += copy;
            expected_spam[rater][label] += 1.0 - copy;
        }
        posteriors.push(posterior);
    }

    EStep {
        posteriors,
        log_marginal_likelihood: ll,
        expected_copies,
        expected_spam,
    }
}

/// Re-estimates every rater's parameters: the maximizer of the expected
/// complete-data log likelihood within the smoothing-floor box.
pub fn m_step(estep: &EStep, delta: f64) -> MaceParams {
    let raters = estep
        .expected_copies
        .iter()
        .zip(&estep.expected_spam)
        .map(|(&copies, spam)| {
            let spam_total: f64 = spam.iter().sum();
            let n = copies + spam_total;
            let f = theta_floor(n, delta);
            let theta = if n > 0.0 { copies / n } else { 0.5 };
            RaterParams {
                theta: theta.clamp(f, 1.0 - f),
                xi: water_fill(spam, xi_floor(n, delta)),
            }
        })
        .collect();
    MaceParams { raters }
}

/// Per-iteration history of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: u32,
    /// Log marginal likelihood after each E-step, starting with the
    /// (projected) initial parameters.
    pub log_marginal_likelihood: Vec<f64>,
    pub iterations: u32,
    pub converged: bool,
}

/// Random starting point of restart `restart`: `theta` uniform in
/// `[0.5, 1)`, `xi` a flat Dirichlet draw (before projection into the
/// M-step box). Each restart has its own ChaCha
/// stream derived from `(seed, restart)`.
pub fn initial_params(n_raters: usize, seed: u64, restart: u32) -> MaceParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let raters = (0..n_raters)
        .map(|_| {
            let theta = 0.5 + 0.5 * rng.random::<f64>();
            let mut xi = [0.0; LABEL_COUNT];
            for x in xi.iter_mut() {
                *x = -(1.0 - rng.random::<f64>()).ln() + f64::MIN_POSITIVE;
            }
            let sum: f64 = xi.iter().sum();
            xi.iter_mut().for_each(|x| *x /= sum);
            RaterParams { theta, xi }
        })
        .collect();
    MaceParams { raters }
}

struct RestartOutcome {
    params: MaceParams,
    estep: EStep,
    trace: RestartTrace,
}

fn fit_restart(
    by_item: &[Vec<(usize, usize)>],
    judgments: &[f64],
    config: &EmConfig,
    restart: u32,
) -> RestartOutcome {
    let delta = config.smoothing_delta;
    let mut params = initial_params(judgments.len(), config.rng_seed, restart);
    project(&mut params, judgments, delta);
    let mut estep = e_step_indexed(by_item, &params);
    let mut trace = RestartTrace {
        restart,
        log_marginal_likelihood: vec![estep.log_marginal_likelihood],
        iterations: 0,
        converged: false,
    };
    for _ in 0..config.max_iterations {
        let next = m_step(&estep, delta);
        let next_estep = e_step_indexed(by_item, &next);
        let improvement = next_estep.log_marginal_likelihood - estep.log_marginal_likelihood;
        trace
            .log_marginal_likelihood
            .push(next_estep.log_marginal_likelihood);
        trace.iterations += 1;
        params = next;
        estep = next_estep;
        if improvement < config.convergence_epsilon {
            trace.converged = true;
            break;
        }
    }
    RestartOutcome {
        params,
        estep,
        trace,
    }
}

fn judgment_counts(matrix: &JudgmentMatrix) -> Vec<f64> {
    let mut counts = vec![0.0; matrix.raters().len()];
    for e in matrix.entries() {
        counts[e.rater] += 1.0;
    }
    counts
}

/// Runs a single restart and returns its final parameters and history.
pub fn run_restart(
    matrix: &JudgmentMatrix,
    config: &EmConfig,
    restart: u32,
) -> (MaceParams, RestartTrace) {
    let out = fit_restart(&matrix.by_item(), &judgment_counts(matrix), config, restart);
    (out.params, out.trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemPosterior {
    pub item: String,
    pub posterior: [f64; LABEL_COUNT],
    pub entropy_nats: f64,
}

impl ItemPosterior {
    /// Most probable label; ties go to the earliest label.
    pub fn label(&self) -> FallacyLabel {
        FallacyLabel::ALL[first_argmax(&self.posterior)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterCompetence {
    pub rater: String,
    pub theta: f64,
    pub xi: [f64; LABEL_COUNT],
    pub judgments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: u32,
    pub log_marginal_likelihood: f64,
    pub iterations: u32,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaceResult {
    pub items: Vec<ItemPosterior>,
    pub raters: Vec<RaterCompetence>,
    pub log_marginal_likelihood: f64,
    pub best_restart: u32,
    pub restarts: Vec<RestartSummary>,
    pub config: EmConfig,
}

impl MaceResult {
    pub fn labels(&self) -> Vec<FallacyLabel> {
        self.items.iter().map(ItemPosterior::label).collect()
    }

    /// Indices of items whose posterior entropy is at most `threshold`.
    pub fn covered(&self, threshold: f64) -> Vec<usize> {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.entropy_nats <= threshold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Fits the model with `config.restarts` restarts and keeps the one with
/// the highest log marginal likelihood (earliest restart on ties).
pub fn run_em(matrix: &JudgmentMatrix, config: &EmConfig) -> Result<MaceResult, AggregationError> {
    if matrix.is_empty() {
        return Err(AggregationError::EmptyMatrix);
    }
    config.validate().map_err(AggregationError::InvalidConfig)?;
    let by_item = matrix.by_item();
    let counts = judgment_counts(matrix);

    let mut best: Option<RestartOutcome> = None;
    let mut summaries = Vec::with_capacity(config.restarts as usize);
    for restart in 0..config.restarts {
        let out = fit_restart(&by_item, &counts, config, restart);
        summaries.push(RestartSummary {
            restart,
            log_marginal_likelihood: out.estep.log_marginal_likelihood,
            iterations: out.trace.iterations,
            converged: out.trace.converged,
        });
        let better = match &best {
            None => true,
            Some(b) => out.estep.log_marginal_likelihood > b.estep.log_marginal_likelihood,
        };
        if better {
            best = Some(out);
        }
    }
    let best = best.expect("at least one restart");

    let items = best
        .estep
        .posteriors
        .iter()
        .enumerate()
        .map(|(i, p)| ItemPosterior {
            item: matrix.item_id(i).to_owned(),
            posterior: *p,
            entropy_nats: entropy_unchecked(p),
        })
        .collect();
    let raters = best
        .params
        .raters
        .iter()
        .enumerate()
        .map(|(j, r)| RaterCompetence {
            rater: matrix.raters()[j].clone(),
            theta: r.theta,
            xi: r.xi,
            judgments: counts[j] as usize,
        })
        .collect();
    Ok(MaceResult {
        items,
        raters,
        log_marginal_likelihood: best.estep.log_marginal_likelihood,
        best_restart: best.trace.restart,
        restarts: summaries,
        config: *config,
    })
}

fn entropy_unchecked(p: &[f64]) -> f64 {
    let h: f64 = p.iter().filter(|v| **v > 0.0).map(|v| -v * v.ln()).sum();
    h.max(0.0)
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn posterior_entropy(p: &[f64]) -> Result<f64, DistributionError> {
    check_distribution(p)?;
    Ok(entropy_unchecked(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FallacyLabel::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(
            posterior_entropy(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
            0.0
        );
        let uniform = posterior_entropy(&[1.0 / 6.0; 6]).unwrap();
        assert!((uniform - 6f64.ln()).abs() < 1e-12);
        assert!((uniform - 1.7918).abs() < 1e-4);
        let half = posterior_entropy(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((half - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(posterior_entropy(&[0.5, 0.4, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn two_agreeing_raters_with_frozen_parameters() {
        let m = JudgmentMatrix::from_votes("en", [("i", "a", RedHerring), ("i", "b", RedHerring)])
            .unwrap();
        let e = e_step(&m, &MaceParams::uniform(2, 0.8));
        let hit = (0.8f64 + 0.2 / 6.0).powi(2);
        let miss = (0.2f64 / 6.0).powi(2);
        let expected = hit / (hit + 5.0 * miss);
        assert!((e.posteriors[0][RedHerring.index()] - expected).abs() < 1e-12);
        assert!((expected - 0.9920).abs() < 1e-4);
    }

    #[test]
    fn single_vote_decides() {
        let m = JudgmentMatrix::from_votes("en", [("i", "a", HastyGeneralization)]).unwrap();
        let r = run_em(&m, &EmConfig::default()).unwrap();
        assert_eq!(r.items[0].label(), HastyGeneralization);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        assert_eq!(
            run_em(&JudgmentMatrix::new("en"), &EmConfig::default()),
            Err(AggregationError::EmptyMatrix)
        );
    }

    #[test]
    fn water_fill_respects_floor_and_maximizes() {
        let w = [5.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let x = water_fill(&w, 0.05);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(x[1], 0.05);
        // free coordinates keep the weight ratio
        assert!((x[0] / x[2] - 5.0).abs() < 1e-9);
        assert!((x[0] - 0.8 * 5.0 / 6.0).abs() < 1e-12);
        let feasible = [0.3, 0.1, 0.2, 0.2, 0.1, 0.1];
        assert_eq!(water_fill(&feasible, 0.05), feasible);
        assert_eq!(water_fill(&[0.0; 6], 0.05), [1.0 / 6.0; 6]);
    }

    #[test]
    fn restarts_use_distinct_streams() {
        let a = initial_params(3, 7, 0);
        let b = initial_params(3, 7, 1);
        assert_ne!(a, b);
        assert_eq!(a, initial_params(3, 7, 0));
        for r in &a.raters {
            assert!((0.5..1.0).contains(&r.theta));
            assert!(check_distribution(&r.xi).is_ok());
        }
    }

    #[test]
    fn m_step_keeps_theta_inside_smoothing_floor() {
        let m = JudgmentMatrix::from_votes(
            "en",
            [
                ("i", "a", AdHominem),
                ("j", "a", AdHominem),
                ("j", "b", NoFallacy),
            ],
        )
        .unwrap();
        let (params, _) = run_restart(&m, &EmConfig::default(), 0);
        for (j, r) in params.raters.iter().enumerate() {
            let n = m.entries().iter().filter(|e| e.rater == j).count() as f64;
            let floor = 0.1 / (n + 0.2);
            assert!(r.theta >= floor - 1e-15 && r.theta <= 1.0 - floor + 1e-15);
            let xf = 0.1 / (n + 0.6);
            assert!(r.xi.iter().all(|x| *x >= xf - 1e-15));
        }
    }
}
