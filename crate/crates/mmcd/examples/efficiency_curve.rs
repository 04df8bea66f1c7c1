//! Finite-sample efficiency of the trimmed estimators on clean data,
//! measured as the per-replication KL ratio against the untrimmed fit.
//! Takes a couple of minutes; the largest grid point fits n = 1000 through
//! the subsampled search ten times.
//!
//! ```text
//! cargo run --release --example efficiency_curve
//! ```

use mmcd::simlab::{efficiency_experiment, median, EstimatorId};

fn main() {
    let grid = [100usize, 300, 1000];
    let reps = 10;
    println!("shape 5x20, {reps} replications per sample size");
    println!("{:>6}  {:>10}  {:>12}", "n", "raw eff", "reweighted eff");
    let result = efficiency_experiment(5, 20, &grid, reps, 2024).unwrap();
    for &n in &grid {
        let raw = median(result.efficiency_values(EstimatorId::MmcdRaw, Some(n)));
        let rew = median(result.efficiency_values(EstimatorId::MmcdReweighted, Some(n)));
        println!("{n:>6}  {raw:>10.3}  {rew:>12.3}");
    }
    println!("(efficiency = median over replications of KL(untrimmed)/KL(estimator))");
}
