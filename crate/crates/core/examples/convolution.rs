//! Exact discrete measures: convolution, affine push-forward, grid entropy,
//! and the identities X_{m+n} = X_m + r^m X_n, mu^(m+n) = mu^(m) * S mu^(n).
//!
//!     cargo run --example convolution

use selfsim::constructions::preset;
use selfsim::covering::{cylinder_recursion_check, GridSpec};
use selfsim::entropy::convolution_identity_check;
use selfsim::measure::{affine_push, convolve, entropy_doubling, grid_entropy, DiscreteMeasure};
use selfsim::{Budget, Rational};

fn main() -> selfsim::Result<()> {
    let budget = Budget::default();
    let mu = DiscreteMeasure::new(vec![
        (Rational::zero(), Rational::new(1, 2)),
        (Rational::new(1, 3), Rational::new(1, 4)),
        (Rational::new(2, 3), Rational::new(1, 4)),
    ])?;
    let sq = convolve(&mu, &mu, budget)?;
    println!("mu * mu = {}", serde_json::to_string(&sq).unwrap());

    let pushed = affine_push(&mu, &Rational::new(-1, 2), &Rational::one())?;
    println!("x -> 1 - x/2 : {}", serde_json::to_string(&pushed).unwrap());

    let grid = GridSpec::new(Rational::new(1, 4))?;
    let h = grid_entropy(&mu, &grid);
    println!("H(mu, 1/4-grid) = {:.4} bits, normalized {:.4}", h.bits, h.normalized.unwrap());
    println!("entropy doubling = {:.4} bits", entropy_doubling(&mu, &grid, budget)?);

    for name in ["cantor3", "overlap-demo"] {
        let ifs = preset(name, None)?;
        let all = (1..=4).all(|m| {
            (1..=4).all(|n| {
                cylinder_recursion_check(&ifs, m, n, budget).unwrap()
                    && convolution_identity_check(&ifs, m, n, budget).unwrap()
            })
        });
        println!("{name}: both identities hold for 1 <= m, n <= 4: {all}");
    }
    Ok(())
}
