//! Box-counting estimates alpha_hat(n) = log2 N_{r^n}(X_n) / (n log2(1/r)).
//!
//!     cargo run --example dimension

use selfsim::constructions::{preset, PRESETS};
use selfsim::covering::dimension_report;
use selfsim::Budget;

fn main() -> selfsim::Result<()> {
    for info in PRESETS {
        let ifs = preset(info.name, None)?;
        let n_max = if ifs.alphabet_size() > 3 { 8 } else { 10 };
        let report = dimension_report(&ifs, n_max, Budget::default())?;
        let trail: Vec<String> = report.s_values.iter().map(|e| format!("{:.3}", e.alpha_hat)).collect();
        println!(
            "{:<14} sdim={:.4}  alpha_hat(n)=[{}]  superadditivity violations: {}",
            info.name,
            report.sdim,
            trail.join(", "),
            report.superadditivity_violations.len()
        );
    }
    Ok(())
}
