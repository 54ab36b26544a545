//! Cylinder sets X_n, their separation Delta_n, and the first exact overlap.
//!
//!     cargo run --example cylinders

use selfsim::constructions::preset;
use selfsim::ifs::{cylinder_points, delta_decay_report, rational_separation_bound};
use selfsim::Budget;

fn main() -> selfsim::Result<()> {
    let budget = Budget::default();
    for name in ["cantor3", "overlap-demo"] {
        let ifs = preset(name, None)?;
        println!("== {name}: r = {}, translations = {:?}", ifs.ratio(), ifs.translations());

        let x2 = cylinder_points(&ifs, 2, budget)?;
        println!("X_2 has {} distinct points from {} words", x2.len(), x2.word_count());
        for (p, mult) in x2.points().iter().zip(x2.multiplicities()) {
            println!("  {p:>8}  x{mult}");
        }

        let report = delta_decay_report(&ifs, 6, budget)?;
        for e in &report.entries {
            let norm = e.normalized_log.map_or("-".to_string(), |v| format!("{v:.4}"));
            println!("  n={}  Delta_n={}  -log2(Delta_n)/n={norm}", e.n, e.delta);
        }
        match report.overlap_level {
            Some(n) => println!("  exact overlap first at n = {n}"),
            None => println!("  no exact overlap up to n = 6"),
        }
        let bound = rational_separation_bound(&ifs);
        println!("  rational lower bound at n=6: {}", bound.bound(6));
    }
    Ok(())
}
