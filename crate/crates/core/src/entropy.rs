//! The word-counting measures `mu^(n)` and the entropy side of the argument.
//!
//! `mu^(n)` puts mass `|Lambda|^{-n}` on `f_w(0)` for every word `w` of length
//! `n`, so it is carried exactly by a [`CylinderSet`] and its multiplicities.
//! Entropies are taken on half-open grids and reported in bits.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::covering::{dimension_report, superadditivity_slack, superadditivity_violations, GridSpec, SuperadditivityViolation};
use crate::error::{Budget, Error, Result};
use crate::ifs::{cylinder_levels, cylinder_points, CylinderSet, Ifs};
use crate::measure::{affine_push, convolve, grid_entropy, CountMeasure, DiscreteMeasure};
use crate::rational::Rational;
use crate::serde_util::finite_or_null;
use crate::tree::{lift_measure, node_entropies, LiftConvention, MAX_HEIGHT};

/// Tolerance for "alpha-hat does not exceed the covering estimate".
pub const ENTROPY_COVER_TOLERANCE: f64 = 0.02;

fn counts_of(set: &CylinderSet) -> CountMeasure {
    CountMeasure {
        denominator: set.denominator().clone(),
        atoms: set.numerators().iter().cloned().zip(set.multiplicities().iter().map(|&c| u128::from(c))).collect(),
    }
}

fn count_measure(ifs: &Ifs, n: usize, budget: Budget) -> Result<CountMeasure> {
    Ok(counts_of(&cylinder_points(ifs, n, budget)?))
}

fn log_inv_r(ifs: &Ifs) -> f64 {
    -ifs.ratio().log2()
}

/// `mu^(n)` with exact rational weights.
pub fn mu_n(ifs: &Ifs, n: usize, budget: Budget) -> Result<DiscreteMeasure> {
    Ok(count_measure(ifs, n, budget)?.to_measure())
}

/// Checks `mu^(m+n) = mu^(m) * S_{r^m} mu^(n)` exactly, atom by atom.
pub fn convolution_identity_check(ifs: &Ifs, m: usize, n: usize, budget: Budget) -> Result<bool> {
    budget.check(Budget::power(ifs.alphabet_size(), m + n))?;
    let whole = mu_n(ifs, m + n, budget)?;
    let left = mu_n(ifs, m, budget)?;
    let right = affine_push(&mu_n(ifs, n, budget)?, &ifs.ratio().pow(m as u32), &Rational::zero())?;
    Ok(convolve(&left, &right, budget)? == whole)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyEntry {
    pub n: usize,
    /// `s_n = H(mu^(n), I_{r^n})` in bits.
    pub bits: f64,
    /// `s_n / (n log2(1/r))`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub entries: Vec<EntropyEntry>,
    /// Normalized entropy at `n_max`.
    pub alpha_hat: f64,
    /// The covering-number estimate at `n_max`, for comparison.
    pub covering_alpha_hat: f64,
    /// `alpha_hat <= covering_alpha_hat + 0.02`.
    pub within_covering_bound: bool,
    pub superadditivity_violations: Vec<SuperadditivityViolation>,
}

pub fn entropy_dimension_report(ifs: &Ifs, n_max: usize, budget: Budget) -> Result<EntropyReport> {
    if n_max == 0 {
        return Err(Error::LevelZero);
    }
    let levels = cylinder_levels(ifs, n_max, budget)?;
    let s: Vec<f64> = levels
        .par_iter()
        .map(|set| counts_of(set).grid_entropy_bits(&ifs.ratio().pow(set.level() as u32)))
        .collect();
    let scale = log_inv_r(ifs);
    let entries: Vec<EntropyEntry> =
        (1..=n_max).map(|n| EntropyEntry { n, bits: s[n], normalized: s[n] / (n as f64 * scale) }).collect();
    let alpha_hat = entries.last().unwrap().normalized;
    let covering_alpha_hat = dimension_report(ifs, n_max, budget)?.bdim_estimate;
    Ok(EntropyReport {
        entries,
        alpha_hat,
        covering_alpha_hat,
        within_covering_bound: alpha_hat <= covering_alpha_hat + ENTROPY_COVER_TOLERANCE,
        superadditivity_violations: superadditivity_violations(&s, superadditivity_slack()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberCell {
    pub cell_start: Rational,
    /// `mu^(m)(I)`.
    pub mass: f64,
    /// `H(mu^(m)_I, I_{r^{m+n}})` in bits.
    pub fiber_bits: f64,
    /// `H(mu^(m)_I * S_{r^m} mu^(n), I_{r^{m+n}}) / (n log2(1/r))`; zero when `n = 0`.
    pub convolution_normalized: f64,
    pub large_fiber: bool,
    pub small_growth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberEntropyProfile {
    pub m: usize,
    pub n: usize,
    pub c: f64,
    pub delta: f64,
    /// Normalized `H(mu^(n), I_{r^n})`; zero when `n = 0`.
    pub alpha_hat: f64,
    /// Mass of cells whose fiber entropy exceeds `c m log2(1/r)` bits.
    pub large_fiber_mass: f64,
    /// Mass of cells whose local convolution entropy is at most `alpha_hat + delta`.
    pub small_growth_mass: f64,
    pub cells: Vec<FiberCell>,
}

struct CellData {
    start: Rational,
    counts: CountMeasure,
}

fn cells_of(mu: &CountMeasure, width: &Rational) -> Vec<CellData> {
    let div = &mu.denominator * width.numer();
    let mut out: Vec<(BigInt, Vec<(BigInt, u128)>)> = Vec::new();
    for (x, c) in &mu.atoms {
        let cell = num_integer::Integer::div_floor(&(x * width.denom()), &div);
        match out.last_mut() {
            Some((last, atoms)) if *last == cell => atoms.push((x.clone(), *c)),
            _ => out.push((cell, vec![(x.clone(), *c)])),
        }
    }
    out.into_iter()
        .map(|(cell, atoms)| CellData {
            start: Rational::from_integer(cell) * width,
            counts: CountMeasure { denominator: mu.denominator.clone(), atoms },
        })
        .collect()
}

/// Per-cell fiber statistics of `mu^(m)` at width `r^m`, with `n = k m`.
pub fn fiber_entropy_profile(ifs: &Ifs, m: usize, k: usize, c: f64, delta: f64, budget: Budget) -> Result<FiberEntropyProfile> {
    let n = k * m;
    budget.check(Budget::power(ifs.alphabet_size(), m + n))?;
    let mu_m = count_measure(ifs, m, budget)?;
    let mu_n = count_measure(ifs, n, budget)?;
    let scale = log_inv_r(ifs);
    let alpha_hat = if n == 0 { 0.0 } else { mu_n.grid_entropy_bits(&ifs.ratio().pow(n as u32)) / (n as f64 * scale) };
    let width = ifs.ratio().pow(m as u32);
    let fine = ifs.ratio().pow((m + n) as u32);
    let total = mu_m.total() as f64;
    let cells: Vec<FiberCell> = cells_of(&mu_m, &width)
        .into_par_iter()
        .map(|cell| {
            let fiber_bits = cell.counts.grid_entropy_bits(&fine);
            let convolution_normalized = if n == 0 {
                0.0
            } else {
                cell.counts.convolve_scaled(&mu_n, &width).grid_entropy_bits(&fine) / (n as f64 * scale)
            };
            FiberCell {
                cell_start: cell.start,
                mass: cell.counts.total() as f64 / total,
                fiber_bits,
                convolution_normalized,
                large_fiber: fiber_bits > c * m as f64 * scale,
                small_growth: convolution_normalized <= alpha_hat + delta,
            }
        })
        .collect();
    let mass_where = |f: fn(&FiberCell) -> bool| cells.iter().filter(|c| f(c)).fold(0.0, |acc, c| acc + c.mass);
    Ok(FiberEntropyProfile {
        m,
        n,
        c,
        delta,
        alpha_hat,
        large_fiber_mass: mass_where(|c| c.large_fiber),
        small_growth_mass: mass_where(|c| c.small_growth),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvolutionWitness {
    pub cell_start: Rational,
    /// `r^{-m} (mu^(m)_I - cell_start)`, supported on `[0, 1)`.
    pub nu: DiscreteMeasure,
    /// `H(nu, I_{r^m}) / (m log2(1/r))`.
    pub nu_entropy: f64,
    /// `H(mu^(m) * nu, I_{r^m}) / (m log2(1/r))`.
    pub convolution_entropy: f64,
    /// `H(mu^(m), I_{r^m}) / (m log2(1/r))`.
    pub base_entropy: f64,
}

/// Among cells passing both fiber conditions (with `c = tau`), finds the one whose
/// rescaled fiber `nu` has the largest normalized entropy at scale `r^m`, subject to
/// `nu_entropy > tau` and `convolution_entropy < base_entropy + delta`. A `tau <= 0`
/// imposes no entropy condition. Ties go to the leftmost cell.
pub fn small_convolution_witness(
    ifs: &Ifs,
    m: usize,
    k: usize,
    tau: f64,
    delta: f64,
    budget: Budget,
) -> Result<Option<ConvolutionWitness>> {
    if m == 0 {
        return Err(Error::InvalidParam("small_convolution_witness needs m >= 1".into()));
    }
    let profile = fiber_entropy_profile(ifs, m, k, tau, delta, budget)?;
    let mu_m = mu_n(ifs, m, budget)?;
    let width = ifs.ratio().pow(m as u32);
    let grid = GridSpec::new(width.clone())?;
    let norm = m as f64 * log_inv_r(ifs);
    let base_entropy = grid_entropy(&mu_m, &grid).bits / norm;
    let inv = width.recip();

    let candidates: Vec<&FiberCell> =
        profile.cells.iter().filter(|c| (tau <= 0.0 || c.large_fiber) && c.small_growth).collect();
    let found = candidates
        .par_iter()
        .map(|cell| -> Result<Option<ConvolutionWitness>> {
            let fiber = crate::measure::conditional_measure(&mu_m, &cell.cell_start, &width)?;
            let nu = affine_push(&fiber, &inv, &(-(&cell.cell_start * &inv)))?;
            let nu_entropy = grid_entropy(&nu, &grid).bits / norm;
            if tau > 0.0 && nu_entropy <= tau {
                return Ok(None);
            }
            let convolution_entropy = grid_entropy(&convolve(&mu_m, &nu, budget)?, &grid).bits / norm;
            if !(convolution_entropy < base_entropy + delta) {
                return Ok(None);
            }
            Ok(Some(ConvolutionWitness { cell_start: cell.cell_start.clone(), nu, nu_entropy, convolution_entropy, base_entropy }))
        })
        .collect::<Result<Vec<_>>>()?;
    // fold keeps the first maximum, i.e. the leftmost cell on ties
    Ok(found.into_iter().flatten().fold(None, |best: Option<ConvolutionWitness>, w| match best {
        Some(b) if b.nu_entropy >= w.nu_entropy => Some(b),
        _ => Some(w),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityMass {
    /// `h_n = ceil(n log2(1/r))`.
    pub height: usize,
    pub alpha_hat: f64,
    /// `(1 - 2 eps) alpha_hat`.
    pub threshold: f64,
    /// Node-distribution probability (levels `0..=h-m`) that `H(theta_{sigma,m}) / m > threshold`.
    #[serde(serialize_with = "finite_or_null")]
    pub mass: f64,
}

/// Tree height matching scale `r^n`: `ceil(n log2(1/r))`, with a small tolerance so exact
/// powers of two are not rounded up.
pub fn lift_height(ifs: &Ifs, n: usize) -> usize {
    let h = n as f64 * log_inv_r(ifs);
    (h - 1e-9).ceil().max(0.0) as usize
}

/// Lifts `mu^(n)` to the dyadic tree of height `h_n` (half-open cells) and measures how
/// much of the node distribution sees nearly `alpha_hat` bits per generation.
pub fn entropy_uniformity_mass(ifs: &Ifs, n: usize, m: usize, eps: f64, budget: Budget) -> Result<UniformityMass> {
    if n == 0 {
        return Err(Error::LevelZero);
    }
    let height = lift_height(ifs, n);
    if height > MAX_HEIGHT {
        return Err(Error::InvalidParam(format!("lifted height {height} exceeds {MAX_HEIGHT}")));
    }
    if m == 0 || m > height {
        return Err(Error::InvalidParam(format!("need 1 <= m <= h_n = {height}, got {m}")));
    }
    let counts = count_measure(ifs, n, budget)?;
    let alpha_hat = counts.grid_entropy_bits(&ifs.ratio().pow(n as u32)) / (n as f64 * log_inv_r(ifs));
    let theta = lift_measure(&counts.to_measure(), height, LiftConvention::HalfOpen)?;
    let threshold = (1.0 - 2.0 * eps) * alpha_hat;
    let hits = node_entropies(&theta, m)?.into_iter().filter(|e| e.2 > threshold).fold(0.0, |acc, e| acc + e.1);
    Ok(UniformityMass { height, alpha_hat, threshold, mass: (hits / (height - m + 1) as f64).min(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::entropy_doubling;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn cantor() -> Ifs {
        Ifs::parse("1/3", &["0", "2/3"]).unwrap()
    }

    fn dyadic() -> Ifs {
        Ifs::parse("1/2", &["0", "1/2"]).unwrap()
    }

    fn overlap() -> Ifs {
        Ifs::parse("1/2", &["0", "1/4", "1/2"]).unwrap()
    }

    fn duplicate() -> Ifs {
        Ifs::parse("1/2", &["0", "0"]).unwrap()
    }

    const B: Budget = Budget(crate::error::DEFAULT_BUDGET);

    #[test]
    fn mu_n_examples() {
        let m1 = mu_n(&cantor(), 1, B).unwrap();
        assert_eq!(m1.atoms(), &[(q("0"), q("1/2")), (q("2/3"), q("1/2"))]);
        let m2 = mu_n(&overlap(), 2, B).unwrap();
        let half = m2.atoms().iter().find(|a| a.0 == q("1/2")).unwrap();
        assert_eq!(half.1, q("2/9"));
        assert_eq!(mu_n(&duplicate(), 3, B).unwrap(), DiscreteMeasure::dirac(q("0")));
        assert_eq!(m2.total_mass(), Rational::one());
    }

    #[test]
    fn mu_n_matches_word_enumeration() {
        // Oracle: enumerate all 3^4 words directly.
        let ifs = overlap();
        let mut atoms = Vec::new();
        for w in 0..81usize {
            let mut x = Rational::zero();
            let mut rp = Rational::one();
            let mut ww = w;
            for _ in 0..4 {
                x = x + &rp * &ifs.translations()[ww % 3];
                rp = &rp * ifs.ratio();
                ww /= 3;
            }
            atoms.push((x, Rational::new(1, 81)));
        }
        assert_eq!(mu_n(&ifs, 4, B).unwrap(), DiscreteMeasure::new(atoms).unwrap());
    }

    #[test]
    fn convolution_identity_examples() {
        assert!(convolution_identity_check(&cantor(), 3, 4, B).unwrap());
        assert!(convolution_identity_check(&overlap(), 2, 2, B).unwrap());
        assert!(convolution_identity_check(&overlap(), 0, 3, B).unwrap());
        assert!(convolution_identity_check(&overlap(), 3, 0, B).unwrap());
        assert!(matches!(convolution_identity_check(&overlap(), 10, 10, B), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn overlap_mu2_grid_entropy() {
        // mu^(2) atoms: 0, 1/8, 1/4 (x2), 3/8, 1/2 (x2), 5/8, 3/4, each word 1/9.
        // Cells of width 1/4: [0,1/4): 2 words, [1/4,1/2): 3, [1/2,3/4): 3, [3/4,1): 1.
        let mu = mu_n(&overlap(), 2, B).unwrap();
        let e = grid_entropy(&mu, &GridSpec::new(q("1/4")).unwrap());
        let h = |p: f64| -p * p.log2();
        let expected = h(2.0 / 9.0) + 2.0 * h(3.0 / 9.0) + h(1.0 / 9.0);
        assert!((e.bits - expected).abs() < 1e-12);
    }

    #[test]
    fn conditional_mu2_cantor() {
        let mu = mu_n(&cantor(), 2, B).unwrap();
        let c = crate::measure::conditional_measure(&mu, &q("0"), &q("1/3")).unwrap();
        assert_eq!(c, DiscreteMeasure::<Rational>::uniform(&[q("0"), q("2/9")]).unwrap());
    }

    #[test]
    fn entropy_report_examples() {
        let r = entropy_dimension_report(&cantor(), 10, B).unwrap();
        assert!((r.alpha_hat - 2f64.ln() / 3f64.ln()).abs() < 0.03);
        assert!(r.within_covering_bound);
        assert!(r.superadditivity_violations.is_empty());

        let r = entropy_dimension_report(&duplicate(), 6, B).unwrap();
        assert!(r.entries.iter().all(|e| e.bits == 0.0));

        let r = entropy_dimension_report(&dyadic(), 8, B).unwrap();
        assert_eq!(r.alpha_hat, 1.0);
    }

    #[test]
    fn fiber_profile_examples() {
        let p = fiber_entropy_profile(&cantor(), 4, 1, 0.01, 0.1, B).unwrap();
        assert!(p.cells.iter().all(|c| c.fiber_bits == 0.0));
        assert_eq!(p.large_fiber_mass, 0.0);

        let p = fiber_entropy_profile(&overlap(), 4, 1, 0.01, 0.1, B).unwrap();
        assert!(p.large_fiber_mass > 0.0);
        let total: f64 = p.cells.iter().map(|c| c.mass).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let p = fiber_entropy_profile(&overlap(), 0, 3, 0.5, 0.0, B).unwrap();
        assert_eq!(p.cells.len(), 1);
        assert_eq!(p.small_growth_mass, 1.0);
    }

    #[test]
    fn small_convolution_examples() {
        assert!(small_convolution_witness(&cantor(), 4, 1, 0.05, 10.0, B).unwrap().is_none());
        let w = small_convolution_witness(&overlap(), 4, 1, 0.01, 10.0, B).unwrap().unwrap();
        assert!(w.nu_entropy > 0.01);
        assert!(w.nu.support().iter().all(|x| !x.is_negative() && *x < Rational::one()));
        let any = small_convolution_witness(&cantor(), 3, 1, 0.0, f64::INFINITY, B).unwrap();
        assert!(any.is_some());
    }

    #[test]
    fn uniformity_mass_examples() {
        let u = entropy_uniformity_mass(&dyadic(), 8, 3, 0.1, B).unwrap();
        assert_eq!(u.height, 8);
        assert_eq!(u.mass, 1.0);
        let u = entropy_uniformity_mass(&duplicate(), 6, 2, 0.2, B).unwrap();
        assert_eq!((u.alpha_hat, u.mass), (0.0, 0.0));
        let u = entropy_uniformity_mass(&cantor(), 8, 2, 0.1, B).unwrap();
        assert_eq!(u.height, 13);
        assert!(u.mass > 0.0 && u.mass < 1.0);
    }

    #[test]
    fn doubling_gap_cantor_is_positive() {
        let mu = mu_n(&cantor(), 6, B).unwrap();
        let gap = entropy_doubling(&mu, &GridSpec::new(q("1/729")).unwrap(), B).unwrap();
        assert!(gap > 0.0);
    }
}
