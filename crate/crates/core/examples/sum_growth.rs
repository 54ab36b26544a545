//! Growth of X_n + Y at scale r^n for the grid Y = {k / 2^j : 0 <= k <= 2^j}.
//!
//!     cargo run --example sum_growth

use selfsim::constructions::preset;
use selfsim::covering::sum_growth_experiment;
use selfsim::{Budget, Rational};

fn main() -> selfsim::Result<()> {
    let ifs = preset("cantor3", None)?;
    for j in [4u32, 6] {
        let y: Vec<Rational> = (0..=1i64 << j).map(|k| Rational::new(k, 1i64 << j)).collect();
        for n in [4usize, 6, 8, 10] {
            let rho = ifs.ratio().pow(n as u32);
            let g = sum_growth_experiment(&ifs, &y, &rho, Budget::default())?;
            println!("j={j} n={n:>2}  N_X={:>5} N_Y={:>3} N_XY={:>6}  delta_hat={:.4}", g.n_x, g.n_y, g.n_xy, g.delta_hat);
        }
    }
    Ok(())
}
