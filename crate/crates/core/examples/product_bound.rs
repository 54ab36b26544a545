//! Search dyadic trees for violations of the leaf-count product bound
//! |leaves| >= prod_i 2^{c_i p_i h}.
//!
//!     cargo run --release --example product_bound

use selfsim::search::{canonical_tree_counts, product_bound_search, SearchMode};
use selfsim::Budget;

fn main() -> selfsim::Result<()> {
    println!("trees per height up to symmetry: {:?}", canonical_tree_counts(5));
    for m in [1, 2] {
        let report = product_bound_search(5, m, SearchMode::Exhaustive, 3, Budget::default())?;
        println!("m={m}: {} violations up to height 5", report.total_violations());
        for inst in &report.instances {
            println!(
                "  h={} leaves={} bound={:.3} excess={:.4}",
                inst.tree.height(),
                inst.actual,
                inst.bound,
                inst.excess
            );
        }
    }
    let random = product_bound_search(12, 1, SearchMode::Random { seed: 1, trials: 500 }, 1, Budget::default())?;
    println!("random trees up to height 12: {} violations", random.total_violations());
    Ok(())
}
