//! Decompose an outlying observation's squared distance into cell, row and
//! column contributions.
//!
//! ```text
//! cargo run --release --example shapley_explain
//! ```

use mmcd::mmcd::{fast_mmcd, MMCDConfig};
use mmcd::model::{sample, DistributionSpec};
use mmcd::params::ParamSet;
use mmcd::shapley::shapley;
use mmcd::simlab::{make_cov, CovSpec};
use nalgebra::DMatrix;

fn main() {
    let (p, q, n) = (4, 6, 120);
    let truth = ParamSet::new(
        DMatrix::zeros(p, q),
        make_cov(&CovSpec::Fix { dim: p, rho: 0.3 }).unwrap(),
        make_cov(&CovSpec::Mix { dim: q, rho: 0.7 }).unwrap(),
    )
    .unwrap();
    let mut data = sample(&DistributionSpec::matrix_normal(truth), n, 5)
        .unwrap()
        .matrices()
        .to_vec();

    // Corrupt two cells of observation 0 and the whole second row of
    // observation 1.
    data[0][(1, 2)] += 6.0;
    data[0][(3, 5)] -= 5.0;
    for j in 0..q {
        data[1][(1, j)] += 2.5;
    }
    let stack = mmcd::stack::MatrixStack::new(data).unwrap();

    let fit = fast_mmcd(&stack, &MMCDConfig::with_seed(9)).unwrap();

    for index in [0usize, 1] {
        let report = shapley(stack.get(index), &fit.reweighted).unwrap();
        println!("observation {index}: squared distance = {:.2}", report.total);
        let mut cells: Vec<(usize, usize, f64)> = (0..p)
            .flat_map(|i| (0..q).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, report.cell[(i, j)]))
            .collect();
        cells.sort_by(|a, b| b.2.abs().total_cmp(&a.2.abs()));
        println!("  top cells by |contribution|:");
        for (i, j, v) in cells.into_iter().take(4) {
            println!("    cell ({i}, {j}): {v:8.2}");
        }
        let rows: Vec<String> = report.row.iter().map(|v| format!("{v:7.2}")).collect();
        println!("  row contributions: [{}]", rows.join(", "));
    }
}
