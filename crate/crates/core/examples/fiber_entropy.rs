//! Fiber entropies of mu^(m), a small-convolution witness, and entropy uniformity
//! of the lifted tree measure.
//!
//!     cargo run --example fiber_entropy

use selfsim::constructions::preset;
use selfsim::entropy::{entropy_uniformity_mass, fiber_entropy_profile, small_convolution_witness};
use selfsim::Budget;

fn main() -> selfsim::Result<()> {
    let budget = Budget::default();
    let ifs = preset("cantor3", None)?;

    let p = fiber_entropy_profile(&ifs, 4, 1, 0.1, 0.1, budget)?;
    println!(
        "m={} n={} alpha_hat={:.4}: large-fiber mass {:.3}, small-growth mass {:.3}, {} cells",
        p.m, p.n, p.alpha_hat, p.large_fiber_mass, p.small_growth_mass, p.cells.len()
    );

    match small_convolution_witness(&ifs, 4, 1, 0.05, 0.1, budget)? {
        Some(w) => println!(
            "witness at {}: H(nu)={:.4}, H(nu * mu)={:.4}, H(mu)={:.4}",
            w.cell_start, w.nu_entropy, w.convolution_entropy, w.base_entropy
        ),
        None => println!("no small-convolution witness"),
    }

    for m in 1..=3 {
        let u = entropy_uniformity_mass(&ifs, 8, m, 0.1, budget)?;
        println!("m={m}: height {}, mass of uniform nodes {:.4}", u.height, u.mass);
    }
    Ok(())
}
