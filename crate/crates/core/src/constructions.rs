//! Named IFS presets and small additive-combinatorics generators.

use std::collections::BTreeSet;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Budget, Error, Result};
use crate::ifs::{validate_and_normalize, Ifs};
use crate::rational::Rational;
use crate::tree::{lift_set, DyadicTree, LiftConvention};

#[derive(Debug, Clone, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub ratio: &'static str,
    pub translations: &'static [&'static str],
    /// Name and default of the optional parameter.
    pub parameter: Option<(&'static str, &'static str)>,
    pub description: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "cantor3",
        ratio: "1/3",
        translations: &["0", "2/3"],
        parameter: None,
        description: "middle-third Cantor set",
    },
    PresetInfo {
        name: "dyadic",
        ratio: "1/2",
        translations: &["0", "1/2"],
        parameter: None,
        description: "two halves of [0,1]; the attractor is the whole interval",
    },
    PresetInfo {
        name: "zero-one-three",
        ratio: "1/4",
        translations: &["0", "1/4", "3/4"],
        parameter: Some(("lambda", "1/4")),
        description: "maps x -> lambda x + d, d in {0,1,3}, rescaled to [0,1]",
    },
    PresetInfo {
        name: "overlap-demo",
        ratio: "1/2",
        translations: &["0", "1/4", "1/2"],
        parameter: None,
        description: "three maps of ratio 1/2 with exact overlaps from level 2",
    },
    PresetInfo {
        name: "duplicate",
        ratio: "1/2",
        translations: &["0", "0"],
        parameter: None,
        description: "two identical maps; the attractor is a point",
    },
];

/// The named IFS, normalized to hull `[0,1]` (except `duplicate`, whose hull is a point).
/// Only `zero-one-three` takes a parameter, `lambda` in `(0,1)`.
pub fn preset(name: &str, param: Option<&Rational>) -> Result<Ifs> {
    if param.is_some() && name != "zero-one-three" {
        return Err(Error::InvalidParam(format!("preset {name} takes no parameter")));
    }
    match name {
        "cantor3" => Ifs::parse("1/3", &["0", "2/3"]),
        "dyadic" => Ifs::parse("1/2", &["0", "1/2"]),
        "overlap-demo" => Ifs::parse("1/2", &["0", "1/4", "1/2"]),
        "duplicate" => Ifs::parse("1/2", &["0", "0"]),
        "zero-one-three" => {
            let lambda = param.cloned().unwrap_or_else(|| Rational::new(1, 4));
            let raw = Ifs::new(lambda.clone(), [0, 1, 3].into_iter().map(Rational::from_integer).collect())
                .map_err(|_| Error::InvalidParam(format!("lambda must lie in (0,1), got {lambda}")))?;
            Ok(validate_and_normalize(&raw)?.0)
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// `base + sum_i j_i d_i` for `0 <= j_i < n_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gap {
    pub base: Rational,
    pub gaps: Vec<Rational>,
    pub lengths: Vec<u64>,
}

impl Gap {
    pub fn new(base: Rational, gaps: Vec<Rational>, lengths: Vec<u64>) -> Result<Self> {
        if gaps.is_empty() || gaps.len() != lengths.len() {
            return Err(Error::InvalidParam("a GAP needs rank >= 1 and one length per gap".into()));
        }
        if gaps.iter().any(Rational::is_zero) || lengths.contains(&0) {
            return Err(Error::InvalidParam("GAP gaps must be nonzero and lengths positive".into()));
        }
        Ok(Gap { base, gaps, lengths })
    }

    pub fn rank(&self) -> usize {
        self.gaps.len()
    }

    pub fn size(&self) -> u128 {
        self.lengths.iter().fold(1u128, |a, &n| a.saturating_mul(u128::from(n)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapPoints {
    /// Distinct values, increasing.
    pub points: Vec<Rational>,
    /// The index map is injective.
    pub proper: bool,
}

pub fn gap_points(g: &Gap, budget: Budget) -> Result<GapPoints> {
    budget.check(g.size())?;
    let mut values = vec![g.base.clone()];
    for (d, &n) in g.gaps.iter().zip(&g.lengths) {
        let steps: Vec<Rational> = (0..n).map(|j| d * &Rational::from_integer(j)).collect();
        values = values.par_iter().flat_map_iter(|v| steps.iter().map(move |s| v + s)).collect();
    }
    let total = values.len();
    values.par_sort();
    values.dedup();
    Ok(GapPoints { proper: values.len() == total, points: values })
}

/// Largest `n` accepted by [`an_construction`].
pub const MAX_AN: usize = 5;

/// The GAP with gaps `2^{-i^2}` and lengths `2^i`, `i = 1..=n`.
pub fn an_gap(n: usize) -> Result<Gap> {
    if n == 0 || n > MAX_AN {
        return Err(Error::InvalidParam(format!("A_n is defined here for 1 <= n <= {MAX_AN}")));
    }
    let gaps = (1..=n).map(|i| Rational::new(1, 1i64 << (i * i))).collect();
    Gap::new(Rational::zero(), gaps, (1..=n).map(|i| 1u64 << i).collect())
}

/// `A_n = sum_{i=1}^n 2^{-i^2} {0, ..., 2^i - 1}`, increasing.
pub fn an_construction(n: usize, budget: Budget) -> Result<Vec<Rational>> {
    if n > MAX_AN {
        return Err(Error::BudgetExceeded { required: 1u128 << (n * (n + 1) / 2).min(127), allowed: budget.0 });
    }
    let g = an_gap(n)?;
    let GapPoints { points, proper } = gap_points(&g, budget)?;
    debug_assert!(proper);
    Ok(points)
}

/// `A_n` lifted to height `n^2` with half-open cells, so that `x` maps to the code `x 2^{n^2}`.
pub fn an_tree(n: usize, budget: Budget) -> Result<DyadicTree> {
    lift_set(&an_construction(n, budget)?, n * n, LiftConvention::HalfOpen)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingStats {
    pub size: usize,
    pub sumset_size: usize,
    /// `|A+A| / |A|`.
    pub ratio: f64,
    /// `log|A+A| / log|A|`; absent for a singleton.
    pub log_ratio: Option<f64>,
}

pub fn doubling_stats(a: &[Rational], budget: Budget) -> Result<DoublingStats> {
    let set: BTreeSet<&Rational> = a.iter().collect();
    if set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let pts: Vec<&Rational> = set.into_iter().collect();
    budget.check((pts.len() as u128).pow(2))?;
    let mut sums: Vec<Rational> =
        pts.par_iter().enumerate().flat_map_iter(|(i, x)| pts[i..].iter().map(move |y| *x + *y)).collect();
    sums.par_sort();
    sums.dedup();
    let (size, sumset_size) = (pts.len(), sums.len());
    Ok(DoublingStats {
        size,
        sumset_size,
        ratio: sumset_size as f64 / size as f64,
        log_ratio: (size > 1).then(|| (sumset_size as f64).ln() / (size as f64).ln()),
    })
}

/// Subset of `{1, ..., n}` keeping each `k` independently with probability `p`.
///
/// Uses SplitMix64 seeded with `seed`; `k` is kept when `(next >> 11) * 2^-53 < p`,
/// one draw per `k` in increasing order.
pub fn random_point_set(n: u64, p: f64, seed: u64) -> Result<Vec<Rational>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    Ok((1..=n)
        .filter(|_| ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < p)
        .map(Rational::from_integer)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{cylinder_points, similarity_dimension};

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn presets_match_catalog() {
        for info in PRESETS {
            let ifs = preset(info.name, None).unwrap();
            assert_eq!(ifs.ratio(), &q(info.ratio));
            let t: Vec<Rational> = info.translations.iter().map(|s| q(s)).collect();
            assert_eq!(ifs.translations(), &t[..]);
        }
        let sd = similarity_dimension(&preset("cantor3", None).unwrap()).sdim;
        assert!((sd - 2f64.ln() / 3f64.ln()).abs() < 1e-15);
        assert!(matches!(preset("sierpinski", None), Err(Error::UnknownPreset(_))));
        assert!(preset("cantor3", Some(&q("1/2"))).is_err());
        assert!(preset("zero-one-three", Some(&q("3/2"))).is_err());
    }

    #[test]
    fn zero_one_three_hull() {
        let ifs = preset("zero-one-three", Some(&q("1/3"))).unwrap();
        assert_eq!(ifs.alphabet_size(), 3);
        assert_eq!(ifs.hull(), (q("0"), q("1")));
        // d (1 - lambda) / 3
        assert_eq!(ifs.translations(), &[q("0"), q("2/9"), q("2/3")]);
    }

    #[test]
    fn duplicate_overlaps_immediately() {
        let x1 = cylinder_points(&preset("duplicate", None).unwrap(), 1, Budget::default()).unwrap();
        assert!(x1.has_overlap());
    }

    #[test]
    fn gap_examples() {
        let g = Gap::new(q("0"), vec![q("10"), q("1")], vec![4, 10]).unwrap();
        let p = gap_points(&g, Budget::default()).unwrap();
        assert!(p.proper);
        assert_eq!(p.points, (0..40).map(Rational::from_integer).collect::<Vec<_>>());

        let g = Gap::new(q("0"), vec![q("1"), q("1")], vec![2, 2]).unwrap();
        let p = gap_points(&g, Budget::default()).unwrap();
        assert!(!p.proper);
        assert_eq!(p.points, vec![q("0"), q("1"), q("2")]);

        let g = Gap::new(q("1/2"), vec![q("1/3")], vec![5]).unwrap();
        assert_eq!(gap_points(&g, Budget::default()).unwrap().points.len(), 5);
        assert!(gap_points(&g, Budget(4)).is_err());
    }

    #[test]
    fn an_examples() {
        let b = Budget::default();
        assert_eq!(an_construction(1, b).unwrap(), vec![q("0"), q("1/2")]);
        assert_eq!(an_construction(2, b).unwrap().len(), 8);
        let a3 = an_construction(3, b).unwrap();
        assert_eq!(a3.len(), 64);
        // Oracle: brute-force minimum over all pairs.
        let mut min_gap = q("1");
        for i in 0..a3.len() {
            for j in 0..i {
                let d = (&a3[i] - &a3[j]).abs();
                if d < min_gap {
                    min_gap = d;
                }
            }
        }
        assert_eq!(min_gap, q("1/512"));
        assert!(matches!(an_construction(6, b), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn doubling_examples() {
        let ap: Vec<Rational> = (0..10).map(Rational::from_integer).collect();
        assert_eq!(doubling_stats(&ap, Budget::default()).unwrap().sumset_size, 19);
        assert_eq!(doubling_stats(&[q("3/7")], Budget::default()).unwrap().sumset_size, 1);
        let a3 = an_construction(3, Budget::default()).unwrap();
        assert!(doubling_stats(&a3, Budget::default()).unwrap().sumset_size <= 512);
    }

    #[test]
    fn random_sets_are_reproducible() {
        let a = random_point_set(100, 0.4, 11).unwrap();
        assert_eq!(a, random_point_set(100, 0.4, 11).unwrap());
        assert_ne!(a, random_point_set(100, 0.4, 12).unwrap());
        assert_eq!(random_point_set(50, 1.0 - 1e-15, 3).unwrap().len(), 50);
        assert!(matches!(random_point_set(10, 1.0, 0), Err(Error::InvalidProbability(_))));
        assert!(matches!(random_point_set(10, 0.0, 0), Err(Error::InvalidProbability(_))));
    }
}
