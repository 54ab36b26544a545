//! Covering numbers of sumsets: the product inequality, localized sumsets inside
//! fibers of X_m, and a small-sumset witness.
//!
//!     cargo run --example sumset

use selfsim::constructions::preset;
use selfsim::covering::{local_sumset_profile, small_sumset_witness, sumset_cover_check};
use selfsim::ifs::cylinder_points;
use selfsim::{Budget, Rational};

fn main() -> selfsim::Result<()> {
    let budget = Budget::default();
    let ifs = preset("cantor3", None)?;

    // N_gamma(A + B) >= N_eps(A) N_gamma(B) / 3 with B inside [0, eps)
    let a = cylinder_points(&ifs, 4, budget)?.points();
    let eps = Rational::new(1, 9);
    let gamma = Rational::new(1, 81);
    let b: Vec<Rational> = cylinder_points(&ifs, 2, budget)?.points().iter().map(|x| x * &eps).collect();
    let check = sumset_cover_check(&a, &b, &eps, &gamma)?;
    println!("N_gamma(A+B) = {}  >=  {:.2}: {}", check.lhs, check.rhs, check.holds);

    // fibers of an overlapping system hold several points
    let ifs = preset("overlap-demo", None)?;
    let profile = local_sumset_profile(&ifs, 3, 1, budget)?;
    println!("local sumsets (m=3, n=3), bound {:.2}:", profile.bound);
    for w in profile.witnesses.iter().take(4) {
        println!("  cell {} : {} points, localized cover {:?}", w.cell_start, w.count, w.localized_cover);
    }

    match small_sumset_witness(&ifs, 3, 1, 2.0, profile.bound, budget)? {
        Some(w) => println!("witness at {}: |Y|={}, N(Y)={}, N(X_n+Y)={}", w.cell_start, w.count, w.cover_y, w.cover_xy),
        None => println!("no witness"),
    }
    Ok(())
}
