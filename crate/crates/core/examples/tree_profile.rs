//! Lift a point set to a dyadic tree and classify its levels into
//! full-branching (U), concentrated (V) and the rest (W).
//!
//!     cargo run --example tree_profile

use selfsim::constructions::preset;
use selfsim::ifs::cylinder_points;
use selfsim::tree::{
    classify_levels, level_profile, lift_set, tree_measure_of_tree, ClassifyMode, LiftConvention,
};
use selfsim::Budget;

fn main() -> selfsim::Result<()> {
    let ifs = preset("cantor3", None)?;
    let points = cylinder_points(&ifs, 6, Budget::default())?.points();
    let tree = lift_set(&points, 10, LiftConvention::HalfOpen)?;
    println!("{} points -> {} leaves at height {}", points.len(), tree.leaf_count(), tree.height());

    let theta = tree_measure_of_tree(&tree);
    let profile = level_profile(&theta, Some(&tree), 1, 0.1)?;
    for s in &profile.levels {
        println!(
            "level {:>2}: full {:.3}  concentrated {:.3}  mean H/m {:.3}",
            s.level, s.frac_full_branching, s.frac_set_concentrated, s.mean_normalized_entropy
        );
    }
    let part = classify_levels(&profile, 0.1, ClassifyMode::Set);
    println!("U = {:?}\nV = {:?}\nW = {:?}", part.u, part.v, part.w);
    Ok(())
}
