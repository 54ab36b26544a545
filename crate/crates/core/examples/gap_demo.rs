//! The generalized arithmetic progressions A_n: size, doubling and their dyadic trees.
//!
//!     cargo run --example gap_demo

use selfsim::constructions::{an_construction, an_tree, doubling_stats};
use selfsim::Budget;

fn main() -> selfsim::Result<()> {
    let budget = Budget::default();
    for n in 1..=3 {
        let a = an_construction(n, budget)?;
        let d = doubling_stats(&a, budget)?;
        println!("A_{n}: |A| = {}, |A+A| = {}, ratio {:.3}", d.size, d.sumset_size, d.ratio);
    }
    let tree = an_tree(4, budget)?;
    println!("A_4 lifts to {} leaves at height {}", tree.leaf_count(), tree.height());
    Ok(())
}
