//! Chain rule for tree measures: leaf entropy / h against the average of
//! node entropies over m generations.
//!
//!     cargo run --example chain_rule

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use selfsim::tree::{chain_rule_check, node_entropies, TreeMeasure};

fn main() -> selfsim::Result<()> {
    let mut rng = SplitMix64::seed_from_u64(7);
    let h = 10;
    let mut weights: Vec<(u64, f64)> = Vec::new();
    for code in 0..1u64 << h {
        if rng.next_u64() % 3 == 0 {
            weights.push((code, (rng.next_u64() >> 11) as f64 + 1.0));
        }
    }
    let total: f64 = weights.iter().map(|w| w.1).sum();
    let theta = TreeMeasure::new(h, weights.into_iter().map(|(c, w)| (c, w / total)).collect())?;

    for m in 1..=3 {
        let c = chain_rule_check(&theta, m)?;
        println!("m={m}: H(theta)/h = {:.6}, node average = {:.6}, residual {:.2e}", c.lhs, c.rhs, c.residual);
    }
    for (level, mass, h) in node_entropies(&theta, 2)?.iter().take(5) {
        println!("  node at level {level}: mass {mass:.4}, H/m {h:.4}");
    }
    Ok(())
}
