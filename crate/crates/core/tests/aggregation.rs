mod oracle;

use fallax_core::aggregation::{
    accuracy, benchmark_crowd, e_step, initial_params, m_step, majority_vote, run_em, run_restart,
    simulate_crowd, theta_floor, xi_floor, EmConfig, JudgmentMatrix, MaceParams, RaterParams,
};
use fallax_core::domain::{FallacyLabel, LABEL_COUNT};
use oracle::{exact, exact_counts, instance_from_seed, to_matrix, Instance};
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn uniform(theta: f64) -> RaterParams {
    RaterParams {
        theta,
        xi: [1.0 / LABEL_COUNT as f64; LABEL_COUNT],
    }
}

#[test]
fn two_agreeing_raters_frozen_values() {
    // p(T=a) = (0.8 + 0.2/6)^2 / ((0.8 + 0.2/6)^2 + 5 (0.2/6)^2) = 125/126
    let inst = Instance {
        items: 1,
        raters: 2,
        votes: vec![(0, 0, 2), (0, 1, 2)],
        params: vec![uniform(0.8), uniform(0.8)],
    };
    let (matrix, params, _) = to_matrix(&inst);
    let e = e_step(&matrix, &params);
    assert!(close(e.posteriors[0][2], 125.0 / 126.0, 1e-12));
    assert!(close(exact(&inst).posteriors[0][2], 125.0 / 126.0, 1e-12));
    // marginal: (1/6) * ((5/6)^2 + 5 (1/30)^2) = 0.11666..
    assert!(close(e.log_marginal_likelihood, (0.7f64 / 6.0).ln(), 1e-12));

    // theta = 0.5: 49/54 and a marginal of exactly 1/16
    let inst = Instance {
        params: vec![uniform(0.5), uniform(0.5)],
        ..inst
    };
    let (matrix, params, _) = to_matrix(&inst);
    let e = e_step(&matrix, &params);
    assert!(close(e.posteriors[0][2], 49.0 / 54.0, 1e-12));
    assert!(close(
        e.log_marginal_likelihood,
        (1.0f64 / 16.0).ln(),
        1e-12
    ));
}

#[test]
fn single_vote_decides() {
    let m = JudgmentMatrix::from_votes("en", [("x", "u", FallacyLabel::RedHerring)]).unwrap();
    let r = run_em(&m, &EmConfig::default()).unwrap();
    assert_eq!(r.labels(), vec![FallacyLabel::RedHerring]);
}

#[test]
fn unanimous_crowd_is_confident() {
    let mut votes = Vec::new();
    let names: Vec<String> = (0..5).map(|j| format!("r{j}")).collect();
    for (i, item) in ["a", "b"].iter().enumerate() {
        for r in &names {
            votes.push((*item, r.as_str(), FallacyLabel::ALL[i + 1]));
        }
    }
    let m = JudgmentMatrix::from_votes("en", votes).unwrap();
    let r = run_em(&m, &EmConfig::default()).unwrap();
    assert_eq!(
        r.labels(),
        vec![FallacyLabel::AppealToEmotion, FallacyLabel::RedHerring]
    );
    for it in &r.items {
        assert!(it.entropy_nats < 0.01, "{it:?}");
    }
}

#[test]
fn oracle_sweep_over_small_instances() {
    for seed in 0..300 {
        let inst = instance_from_seed(seed, 3, 4);
        let (matrix, params, index) = to_matrix(&inst);
        let e = e_step(&matrix, &params);
        let want = exact(&inst);
        for (i, &k) in index.iter().enumerate() {
            for t in 0..LABEL_COUNT {
                assert!(
                    close(e.posteriors[k][t], want.posteriors[i][t], 1e-9),
                    "seed {seed} item {i} label {t}"
                );
            }
        }
        assert!(close(
            e.log_marginal_likelihood,
            want.log_marginal_likelihood,
            1e-9
        ));
    }
}

#[test]
fn expected_counts_match_indicator_enumeration() {
    for seed in 0..40 {
        let mut inst = instance_from_seed(1000 + seed, 2, 3);
        inst.votes.truncate(8);
        let items: std::collections::BTreeSet<usize> = inst.votes.iter().map(|v| v.0).collect();
        if items.len() < inst.items {
            continue;
        }
        let (matrix, params, _) = to_matrix(&inst);
        let e = e_step(&matrix, &params);
        let want = exact_counts(&inst);
        for (k, name) in matrix.raters().iter().enumerate() {
            let j: usize = name[1..].parse().unwrap();
            assert!(close(e.expected_copies[k], want.expected_copies[j], 1e-9));
            for a in 0..LABEL_COUNT {
                assert!(close(e.expected_spam[k][a], want.expected_spam[j][a], 1e-9));
            }
        }
    }
}

/// Accuracy (in items out of 200) on the benchmark crowd for seeds 0..10
/// with default settings: (em, majority).
const RECOVERY_FIXTURE: [(usize, usize); 10] = [
    (196, 185),
    (195, 187),
    (198, 187),
    (195, 191),
    (195, 188),
    (196, 188),
    (196, 182),
    (193, 189),
    (194, 187),
    (196, 186),
];

#[test]
fn benchmark_crowd_regression() {
    for (seed, &(em, majority)) in RECOVERY_FIXTURE.iter().enumerate() {
        let crowd = simulate_crowd(&benchmark_crowd(seed as u64)).unwrap();
        let r = run_em(&crowd.matrix, &EmConfig::default()).unwrap();
        let hits = |labels: &[FallacyLabel]| {
            (accuracy(labels, &crowd.truth) * crowd.truth.len() as f64).round() as usize
        };
        assert_eq!(hits(&r.labels()), em, "seed {seed}");
        assert_eq!(
            hits(&majority_vote(&crowd.matrix).unwrap()),
            majority,
            "seed {seed}"
        );
    }
}

fn arb_instance(max_items: usize, max_raters: usize) -> impl Strategy<Value = Instance> {
    any::<u64>().prop_map(move |s| instance_from_seed(s, max_items, max_raters))
}

fn arb_matrix() -> impl Strategy<Value = JudgmentMatrix> {
    (1usize..25, 1usize..7, any::<u64>()).prop_map(|(items, raters, seed)| {
        let inst = instance_from_seed(seed, items, raters);
        to_matrix(&inst).0
    })
}

fn permute_params(p: &MaceParams, perm: &[usize; LABEL_COUNT]) -> MaceParams {
    MaceParams {
        raters: p
            .raters
            .iter()
            .map(|r| {
                let mut xi = [0.0; LABEL_COUNT];
                for k in 0..LABEL_COUNT {
                    xi[perm[k]] = r.xi[k];
                }
                RaterParams { theta: r.theta, xi }
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn e_step_matches_oracle(inst in arb_instance(3, 4)) {
        let (matrix, params, index) = to_matrix(&inst);
        let e = e_step(&matrix, &params);
        let want = exact(&inst);
        for (i, &k) in index.iter().enumerate() {
            for t in 0..LABEL_COUNT {
                prop_assert!(close(e.posteriors[k][t], want.posteriors[i][t], 1e-9));
            }
        }
    }

    #[test]
    fn likelihood_never_decreases(matrix in arb_matrix(), seed in any::<u64>()) {
        let config = EmConfig { rng_seed: seed, ..EmConfig::default() };
        for restart in 0..3 {
            let (_, trace) = run_restart(&matrix, &config, restart);
            for w in trace.log_marginal_likelihood.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{} then {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn outputs_are_normalized_and_bounded(matrix in arb_matrix()) {
        let r = run_em(&matrix, &EmConfig::default()).unwrap();
        for it in &r.items {
            prop_assert!(close(it.posterior.iter().sum::<f64>(), 1.0, 1e-9));
            prop_assert!(it.entropy_nats >= 0.0 && it.entropy_nats <= (LABEL_COUNT as f64).ln() + 1e-12);
        }
        for rc in &r.raters {
            let n = rc.judgments as f64;
            let f = theta_floor(n, 0.1);
            prop_assert!(rc.theta >= f - 1e-12 && rc.theta <= 1.0 - f + 1e-12);
            prop_assert!(close(rc.xi.iter().sum::<f64>(), 1.0, 1e-9));
            prop_assert!(rc.xi.iter().all(|x| *x >= xi_floor(n, 0.1) - 1e-12));
        }
    }

    #[test]
    fn coverage_grows_with_threshold(matrix in arb_matrix(), a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let r = run_em(&matrix, &EmConfig::default()).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = r.covered(lo);
        let large = r.covered(hi);
        prop_assert!(small.iter().all(|i| large.contains(i)));
        prop_assert_eq!(r.covered((LABEL_COUNT as f64).ln() + 1e-9).len(), r.items.len());
    }

    #[test]
    fn runs_are_bit_reproducible(matrix in arb_matrix(), seed in any::<u64>()) {
        let config = EmConfig { rng_seed: seed, restarts: 3, ..EmConfig::default() };
        let a = serde_json::to_string(&run_em(&matrix, &config).unwrap()).unwrap();
        let b = serde_json::to_string(&run_em(&matrix, &config).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn relabelling_commutes_with_em_steps(
        inst in arb_instance(4, 4),
        perm in Just((0..LABEL_COUNT).collect::<Vec<_>>()).prop_shuffle(),
        seed in any::<u64>(),
    ) {
        let perm: [usize; LABEL_COUNT] = perm.try_into().unwrap();
        let (matrix, _, _) = to_matrix(&inst);
        let params = initial_params(matrix.raters().len(), seed, 0);
        let mut relabelled = JudgmentMatrix::new("oracle");
        for e in matrix.entries() {
            relabelled.push(
                matrix.item_id(e.item),
                &matrix.raters()[e.rater],
                FallacyLabel::ALL[perm[e.label.index()]],
            ).unwrap();
        }
        let e1 = e_step(&matrix, &params);
        let e2 = e_step(&relabelled, &permute_params(&params, &perm));
        prop_assert!(close(e1.log_marginal_likelihood, e2.log_marginal_likelihood, 1e-9));
        for (p, q) in e1.posteriors.iter().zip(&e2.posteriors) {
            for k in 0..LABEL_COUNT {
                prop_assert!(close(p[k], q[perm[k]], 1e-9));
            }
        }
        let m1 = m_step(&e1, 0.1);
        let m2 = m_step(&e2, 0.1);
        let m1p = permute_params(&m1, &perm);
        for (a, b) in m1p.raters.iter().zip(&m2.raters) {
            prop_assert!(close(a.theta, b.theta, 1e-9));
            for k in 0..LABEL_COUNT {
                prop_assert!(close(a.xi[k], b.xi[k], 1e-9));
            }
        }
    }
}
