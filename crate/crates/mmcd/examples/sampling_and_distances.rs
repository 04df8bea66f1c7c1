//! Sample from the matrix normal and matrix t families, and check the
//! chi-square calibration of squared distances at the true parameters.
//!
//! ```text
//! cargo run --release --example sampling_and_distances
//! ```

use mmcd::chi2::chi2_quantile;
use mmcd::model::{mmd_squared, sample, DistributionSpec};
use mmcd::params::ParamSet;
use mmcd::simlab::{make_cov, CovSpec};
use nalgebra::DMatrix;

fn main() {
    let (p, q, n) = (3, 4, 20_000);
    let params = ParamSet::new(
        DMatrix::zeros(p, q),
        make_cov(&CovSpec::Fix { dim: p, rho: 0.4 }).unwrap(),
        make_cov(&CovSpec::Mix { dim: q, rho: 0.7 }).unwrap(),
    )
    .unwrap();

    let normal = DistributionSpec::matrix_normal(params.clone());
    let stack = sample(&normal, n, 1).unwrap();
    let distances: Vec<f64> = stack
        .iter()
        .map(|x| mmd_squared(x, &params).unwrap())
        .collect();
    let mean = distances.iter().sum::<f64>() / n as f64;
    println!("matrix normal, {n} draws of shape {p}x{q}:");
    println!("  mean squared distance = {mean:.3} (theory: pq = {})", p * q);
    for quantile in [0.9, 0.975, 0.99] {
        let cutoff = chi2_quantile(quantile, p * q).unwrap();
        let exceed = distances.iter().filter(|d| **d > cutoff).count() as f64 / n as f64;
        println!(
            "  fraction above the {quantile} cutoff = {exceed:.4} (theory: {:.4})",
            1.0 - quantile
        );
    }

    // Heavier tails: the same cutoffs are exceeded far more often.
    for dof in [3.0, 10.0, 50.0] {
        let t_spec = DistributionSpec::matrix_t(params.clone(), dof).unwrap();
        let t_stack = sample(&t_spec, n, 2).unwrap();
        let cutoff = chi2_quantile(0.99, p * q).unwrap();
        let exceed = t_stack
            .iter()
            .filter(|x| mmd_squared(x, &params).unwrap() > cutoff)
            .count() as f64
            / n as f64;
        println!("matrix t with {dof} dof: fraction above the 0.99 cutoff = {exceed:.4}");
    }
}
