//! Random subsets of {1..n}: doubling and the dyadic covering sandwich
//! N_{2^-k} <= |T ∩ {0,1}^k| <= 2 N_{2^-k}.
//!
//!     cargo run --example random_sets

use selfsim::constructions::{doubling_stats, random_point_set};
use selfsim::covering::{cover_count, CoverMode};
use selfsim::tree::{lift_set, LiftConvention};
use selfsim::{Budget, Rational};

fn main() -> selfsim::Result<()> {
    let n = 256u64;
    let set = random_point_set(n, 0.3, 42)?;
    let d = doubling_stats(&set, Budget::default())?;
    println!("|A| = {}, |A+A| = {}", d.size, d.sumset_size);

    // rescale into [0, 1) before lifting
    let unit: Vec<Rational> = set.iter().map(|x| x / &Rational::from_integer(n + 1)).collect();
    let tree = lift_set(&unit, 12, LiftConvention::HalfOpen)?;
    for k in [2, 4, 6, 8] {
        let nodes = tree.nodes_at(k).len();
        let cover = cover_count(&unit, &Rational::new(1, 1i64 << k), CoverMode::Optimal)?;
        println!("k={k}: N = {cover}, nodes at level k = {nodes}");
    }
    Ok(())
}
