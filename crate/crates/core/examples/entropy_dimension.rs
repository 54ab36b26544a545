//! Entropy dimension of the word-counting measures mu^(n), compared with covering numbers.
//!
//!     cargo run --example entropy_dimension

use selfsim::constructions::preset;
use selfsim::entropy::{entropy_dimension_report, mu_n};
use selfsim::Budget;

fn main() -> selfsim::Result<()> {
    let budget = Budget::default();
    let ifs = preset("overlap-demo", None)?;
    let mu2 = mu_n(&ifs, 2, budget)?;
    println!("mu^(2) for overlap-demo: {}", serde_json::to_string(&mu2).unwrap());

    for name in ["cantor3", "dyadic", "overlap-demo", "zero-one-three"] {
        let ifs = preset(name, None)?;
        let report = entropy_dimension_report(&ifs, 8, budget)?;
        println!(
            "{name:<14} entropy alpha_hat={:.4}  covering alpha_hat={:.4}  entropy <= covering: {}",
            report.alpha_hat, report.covering_alpha_hat, report.within_covering_bound
        );
    }
    Ok(())
}
