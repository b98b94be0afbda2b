//! Fits the competence model to simulated crowds and compares it with a
//! plain majority vote.
//!
//! ```text
//! cargo run -p fallax-core --example crowd_recovery -- [seeds]
//! ```

use fallax_core::aggregation::{
    accuracy, accuracy_on, benchmark_crowd, majority_vote, run_em, simulate_crowd, EmConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(10);
    println!("seed  em_acc  majority_acc  covered@0.7  acc@0.7  covered@0.3  acc@0.3  ll");
    for seed in 0..seeds {
        let crowd = simulate_crowd(&benchmark_crowd(seed))?;
        let result = run_em(&crowd.matrix, &EmConfig::default())?;
        let labels = result.labels();
        let majority = majority_vote(&crowd.matrix)?;
        let c7 = result.covered(0.7);
        let c3 = result.covered(0.3);
        println!(
            "{seed:>4}  {:.4}  {:.4}  {:>11}  {:.4}  {:>11}  {:.4}  {:.6}",
            accuracy(&labels, &crowd.truth),
            accuracy(&majority, &crowd.truth),
            c7.len(),
            accuracy_on(&labels, &crowd.truth, &c7),
            c3.len(),
            accuracy_on(&labels, &crowd.truth, &c3),
            result.log_marginal_likelihood,
        );
    }
    Ok(())
}
