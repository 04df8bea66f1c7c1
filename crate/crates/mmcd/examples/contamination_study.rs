//! Compare estimators under shift, block and cell contamination.
//!
//! ```text
//! cargo run --release --example contamination_study
//! ```

use mmcd::mmcd::MMCDConfig;
use mmcd::simlab::{
    contamination_experiment, median, ContaminationSpec, EstimatorId, Scheme, SimScenario,
};

fn main() {
    let reps = 10;
    let schemes = [
        ("shift", Scheme::Shift { gamma: 1.0 }),
        (
            "block",
            Scheme::Block {
                gamma: 1.0,
                rows: 2,
                cols: 5,
            },
        ),
        (
            "cell",
            Scheme::Cell {
                permute_fraction: 0.1,
            },
        ),
    ];
    for (name, scheme) in schemes {
        let scenario = SimScenario {
            contamination: Some(ContaminationSpec {
                scheme,
                epsilon: 0.1,
                scale_multiplier: 1.0,
            }),
            mmcd: MMCDConfig {
                n_initial_subsets: 100,
                ..MMCDConfig::default()
            },
            ..SimScenario::new(5, 20, 400)
        };
        let result = contamination_experiment(&scenario, reps, 11).unwrap();
        println!("== {name} contamination, 5x20, n = 400, eps = 0.1, {reps} reps ==");
        println!(
            "{:>16} {:>8} {:>10} {:>8} {:>8}",
            "estimator", "KL", "frobenius", "recall", "F"
        );
        for est in [
            EstimatorId::Mle,
            EstimatorId::MmcdRaw,
            EstimatorId::MmcdReweighted,
            EstimatorId::Truth,
        ] {
            println!(
                "{:>16} {:>8.3} {:>10.3} {:>8.3} {:>8.3}",
                est.name(),
                median(result.values(est, None, |r| r.kl)),
                median(result.values(est, None, |r| r.frobenius)),
                median(result.values(est, None, |r| r.recall)),
                median(result.values(est, None, |r| r.f_score)),
            );
        }
        println!();
    }
}
