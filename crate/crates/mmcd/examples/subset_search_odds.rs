//! Why elemental subsets: the odds of drawing at least one clean starting
//! subset, and how many draws different contamination levels require.
//!
//! ```text
//! cargo run --release --example subset_search_odds
//! ```

use mmcd::flipflop::aspect_ratio_floor;
use mmcd::mmcd::{clean_subset_probability, max_breakdown_h, required_subsets};

fn main() {
    println!("subset sizes and breakdown for a few shapes (n = 100):");
    println!(
        "{:>8} {:>4} {:>4} {:>14} {:>12}",
        "shape", "d", "h", "replacements", "degenerate"
    );
    for (p, q) in [(5usize, 20usize), (2, 8), (30, 30), (1, 20)] {
        let b = max_breakdown_h(100, p, q);
        println!(
            "{:>8} {:>4} {:>4} {:>14} {:>12}",
            format!("{p}x{q}"),
            aspect_ratio_floor(p, q),
            b.h,
            b.m_breakdown,
            if b.mcd_coincidence { "yes" } else { "no" }
        );
    }

    println!();
    println!("probability of at least one clean elemental subset among m = 500 draws:");
    println!("{:>6} {:>8} {:>12}", "eps", "d", "probability");
    for &epsilon in &[0.1, 0.2, 0.3, 0.4] {
        for &d in &[2usize, 4, 10] {
            let prob = clean_subset_probability(epsilon, d, 500).unwrap();
            println!("{epsilon:>6.1} {d:>8} {prob:>12.6}");
        }
    }

    println!();
    println!("subsets needed for 99% odds of one clean draw:");
    println!("{:>6} {:>8} {:>10}", "eps", "d", "required");
    for &epsilon in &[0.1, 0.2, 0.3, 0.4] {
        for &d in &[2usize, 4, 10] {
            let m = required_subsets(epsilon, d, 0.99).unwrap();
            println!("{epsilon:>6.1} {d:>8} {m:>10}");
        }
    }
    println!();
    println!(
        "a vectorized 5x20 problem has d = 100: at 20% contamination it needs {} subsets,\n\
         while the matrix-variate search (d = 4) needs {}",
        required_subsets(0.2, 100, 0.99).unwrap(),
        required_subsets(0.2, 4, 0.99).unwrap()
    );
}
