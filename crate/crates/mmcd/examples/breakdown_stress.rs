//! Push the estimator to its breakdown point: replace just under the
//! critical number of observations with arbitrarily remote matrices and
//! watch the trimmed fit stay bounded while the plain fit explodes.
//!
//! ```text
//! cargo run --release --example breakdown_stress
//! ```

use mmcd::flipflop::{flip_flop_mle, FlipFlopConfig};
use mmcd::mmcd::{fast_mmcd, max_breakdown_h, MMCDConfig};
use mmcd::model::{sample, DistributionSpec};
use mmcd::params::ParamSet;
use mmcd::simlab::{make_cov, CovSpec};
use mmcd::stack::MatrixStack;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let (p, q, n) = (5, 20, 100);
    let breakdown = max_breakdown_h(n, p, q);
    println!(
        "shape {p}x{q}, n = {n}: h = {} tolerates {} arbitrary replacements",
        breakdown.h, breakdown.m_breakdown
    );

    let truth = ParamSet::new(
        DMatrix::zeros(p, q),
        make_cov(&CovSpec::Rnd { dim: p, seed: 2 }).unwrap(),
        make_cov(&CovSpec::Mix { dim: q, rho: 0.7 }).unwrap(),
    )
    .unwrap();
    let clean = sample(&DistributionSpec::matrix_normal(truth), n, 77).unwrap();
    let cfg = MMCDConfig::with_seed(5);
    let clean_fit = fast_mmcd(&clean, &cfg).unwrap();

    // Replace m - 1 observations with matrices of Frobenius norm 1e6.
    let replace = breakdown.m_breakdown - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut data = clean.matrices().to_vec();
    for i in rand::seq::index::sample(&mut rng, n, replace).iter() {
        let direction = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        data[i] = &direction * (1e6 / direction.norm());
    }
    let contaminated = MatrixStack::new(data).unwrap();

    let fit = fast_mmcd(&contaminated, &cfg).unwrap();
    let all: Vec<usize> = (0..n).collect();
    let mle = flip_flop_mle(&contaminated, &all, &FlipFlopConfig::default()).unwrap();

    println!("replaced {replace} of {n} observations with norm-1e6 matrices");
    println!(
        "{:>24} {:>14} {:>14}",
        "", "clean data", "contaminated"
    );
    println!(
        "{:>24} {:>14.3} {:>14.3}",
        "robust mean norm",
        clean_fit.reweighted.mean().norm(),
        fit.reweighted.mean().norm()
    );
    println!(
        "{:>24} {:>14.3} {:>14.3e}",
        "plain fit mean norm",
        flip_flop_mle(&clean, &all, &FlipFlopConfig::default())
            .unwrap()
            .params
            .mean()
            .norm(),
        mle.params.mean().norm()
    );
    let kept_outliers = fit
        .h_subset
        .iter()
        .filter(|&&i| contaminated.get(i).norm() > 1e3)
        .count();
    println!("replaced observations inside the selected subset: {kept_outliers}");
}
