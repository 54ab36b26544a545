//! Uniformly contracting iterated function systems on the line with exact
//! rational data, and the level-`n` cylinder point sets they generate.
//!
//! An [`Ifs`] is the family `f_i(x) = r*x + a_i` for a common ratio
//! `0 < r < 1`. For a word `w = w_1 ... w_n` the composed map is
//! `f_w = f_{w_1} o ... o f_{w_n}`, so
//!
//! ```text
//! f_w(x) = r^n * x + sum_{k=1..n} a_{w_k} * r^(k-1)
//! ```
//!
//! The level-`n` approximation `X_n = { f_w(0) : |w| = n }` is built one
//! level at a time from `X_{m+1} = X_m + r^m X_1`, merging equal points and
//! keeping their word multiplicities. Every point of `X_n` is an integer
//! multiple of `1 / (L * q^(n-1))` where `L` is the common denominator of the
//! translations and `q` the denominator of `r`, so cylinder sets are stored as
//! integer numerators over one shared denominator.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Budget, Error, Result};
use crate::rational::Rational;

/// A uniformly contracting, orientation-preserving affine IFS.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawIfs")]
pub struct Ifs {
    ratio: Rational,
    translations: Vec<Rational>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIfs {
    ratio: Rational,
    translations: Vec<Rational>,
}

impl TryFrom<RawIfs> for Ifs {
    type Error = Error;

    fn try_from(raw: RawIfs) -> Result<Self> {
        Ifs::new(raw.ratio, raw.translations)
    }
}

impl fmt::Debug for Ifs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ifs(r={}, a={:?})", self.ratio, self.translations)
    }
}

impl Ifs {
    /// Checks `0 < ratio < 1` and that there are at least two maps.
    /// Translations may repeat; repeated translations are exact overlaps at level 1.
    pub fn new(ratio: Rational, translations: Vec<Rational>) -> Result<Self> {
        if !ratio.is_positive() || ratio >= Rational::one() {
            return Err(Error::InvalidRatio(ratio.to_string()));
        }
        if translations.len() < 2 {
            return Err(Error::TooFewMaps(translations.len()));
        }
        Ok(Ifs { ratio, translations })
    }

    /// Convenience constructor from `"p/q"` literals.
    pub fn parse(ratio: &str, translations: &[&str]) -> Result<Self> {
        let r = ratio.parse().map_err(|e| Error::InvalidParam(format!("{e}")))?;
        let a = translations
            .iter()
            .map(|t| t.parse().map_err(|e| Error::InvalidParam(format!("{e}"))))
            .collect::<Result<Vec<Rational>>>()?;
        Ifs::new(r, a)
    }

    pub fn ratio(&self) -> &Rational {
        &self.ratio
    }

    pub fn translations(&self) -> &[Rational] {
        &self.translations
    }

    pub fn alphabet_size(&self) -> usize {
        self.translations.len()
    }

    /// Endpoints `(min a_i / (1-r), max a_i / (1-r))` of the convex hull of the attractor.
    pub fn hull(&self) -> (Rational, Rational) {
        let one_minus = Rational::one() - &self.ratio;
        let lo = self.translations.iter().min().unwrap();
        let hi = self.translations.iter().max().unwrap();
        (lo / &one_minus, hi / &one_minus)
    }

    /// The map `f_i`.
    pub fn apply(&self, symbol: usize, x: &Rational) -> Result<Rational> {
        let a = self.translations.get(symbol).ok_or(Error::SymbolOutOfRange {
            symbol,
            alphabet: self.alphabet_size(),
        })?;
        Ok(&self.ratio * x + a)
    }
}

/// `x -> scale * x + shift`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: Rational,
    pub shift: Rational,
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap { scale: Rational::one(), shift: Rational::zero() }
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        &self.scale * x + &self.shift
    }
}

/// Conjugates `ifs` by the affine map sending its attractor hull onto `[0, 1]`.
///
/// Returns the conjugated IFS together with the map `phi` used, so that the new
/// maps are `phi o f_i o phi^-1`.
pub fn validate_and_normalize(ifs: &Ifs) -> Result<(Ifs, AffineMap)> {
    let (lo, hi) = ifs.hull();
    let width = &hi - &lo;
    if width.is_zero() {
        return Err(Error::AllMapsShareFixedPoint);
    }
    let scale = width.recip();
    let shift = -(&lo * &scale);
    let one_minus = Rational::one() - ifs.ratio();
    let offset = &lo * &one_minus;
    let translations = ifs.translations().iter().map(|a| (a - &offset) * &scale).collect();
    let normalized = Ifs::new(ifs.ratio().clone(), translations)?;
    Ok((normalized, AffineMap { scale, shift }))
}

/// A finite word over the alphabet `{0, ..., |Lambda| - 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

/// `f_w(x) = f_{w_1}(f_{w_2}(... f_{w_n}(x)))`, evaluated exactly.
pub fn apply_word(ifs: &Ifs, word: &Word, x: &Rational) -> Result<Rational> {
    let mut acc = x.clone();
    for &s in word.0.iter().rev() {
        acc = ifs.apply(s, &acc)?;
    }
    Ok(acc)
}

/// The distinct points `f_w(0)`, `|w| = level`, with word multiplicities.
///
/// Point `k` is `numerators[k] / denominator`; numerators are strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderSet {
    level: usize,
    denominator: BigInt,
    numerators: Vec<BigInt>,
    multiplicities: Vec<u64>,
}

impl CylinderSet {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    /// Shared denominator of all points (not necessarily reduced).
    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.numerators
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    pub fn point(&self, k: usize) -> Rational {
        Rational::new(self.numerators[k].clone(), self.denominator.clone())
    }

    /// All points as reduced rationals, increasing.
    pub fn points(&self) -> Vec<Rational> {
        self.numerators
            .par_iter()
            .map(|n| Rational::new(n.clone(), self.denominator.clone()))
            .collect()
    }

    /// Total number of words, `|Lambda|^level`.
    pub fn word_count(&self) -> u128 {
        self.multiplicities.iter().map(|&m| u128::from(m)).sum()
    }

    pub fn has_overlap(&self) -> bool {
        self.multiplicities.iter().any(|&m| m > 1)
    }

    /// Smallest gap between consecutive distinct points, `None` for a single point.
    pub fn min_gap(&self) -> Option<Rational> {
        self.numerators
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .min()
            .map(|g| Rational::new(g, self.denominator.clone()))
    }
}

/// Integer form of the IFS data used by the level recursion.
struct ScaledIfs {
    /// `a_i * L` for the common denominator `L` of the translations.
    scaled_translations: Vec<BigInt>,
    common_denominator: BigInt,
    ratio_num: BigInt,
    ratio_den: BigInt,
}

impl ScaledIfs {
    fn new(ifs: &Ifs) -> Self {
        let common_denominator =
            ifs.translations().iter().fold(BigInt::one(), |acc, a| acc.lcm(a.denom()));
        let scaled_translations = ifs
            .translations()
            .iter()
            .map(|a| a.numer() * (&common_denominator / a.denom()))
            .collect();
        ScaledIfs {
            scaled_translations,
            common_denominator,
            ratio_num: ifs.ratio().numer().clone(),
            ratio_den: ifs.ratio().denom().clone(),
        }
    }

    fn level_zero(&self) -> CylinderSet {
        CylinderSet {
            level: 0,
            denominator: self.common_denominator.clone(),
            numerators: vec![BigInt::zero()],
            multiplicities: vec![1],
        }
    }

    /// `X_{m+1} = X_m + r^m X_1`.
    fn next(&self, prev: &CylinderSet) -> CylinderSet {
        let m = prev.level;
        let factor = if m == 0 { BigInt::one() } else { self.ratio_den.clone() };
        let p_pow = num_traits::pow(self.ratio_num.clone(), m);
        let offsets: Vec<BigInt> = self.scaled_translations.iter().map(|a| a * &p_pow).collect();

        let mut merged: Vec<(BigInt, u64)> = prev
            .numerators
            .par_iter()
            .zip(prev.multiplicities.par_iter())
            .flat_map_iter(|(n, &mult)| {
                let base = n * &factor;
                offsets.iter().map(move |o| (&base + o, mult))
            })
            .collect();
        merged.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let mut numerators = Vec::with_capacity(merged.len());
        let mut multiplicities: Vec<u64> = Vec::with_capacity(merged.len());
        for (n, mult) in merged {
            if numerators.last() == Some(&n) {
                *multiplicities.last_mut().unwrap() += mult;
            } else {
                numerators.push(n);
                multiplicities.push(mult);
            }
        }
        CylinderSet { level: m + 1, denominator: &prev.denominator * factor, numerators, multiplicities }
    }
}

/// `X_0, X_1, ..., X_{n_max}`, built incrementally.
pub fn cylinder_levels(ifs: &Ifs, n_max: usize, budget: Budget) -> Result<Vec<CylinderSet>> {
    budget.check(Budget::power(ifs.alphabet_size(), n_max))?;
    let scaled = ScaledIfs::new(ifs);
    let mut levels = Vec::with_capacity(n_max + 1);
    levels.push(scaled.level_zero());
    for _ in 0..n_max {
        let next = scaled.next(levels.last().unwrap());
        levels.push(next);
    }
    Ok(levels)
}

/// The level-`n` cylinder points `{ f_w(0) : |w| = n }` with multiplicities.
pub fn cylinder_points(ifs: &Ifs, n: usize, budget: Budget) -> Result<CylinderSet> {
    budget.check(Budget::power(ifs.alphabet_size(), n))?;
    let scaled = ScaledIfs::new(ifs);
    let mut cur = scaled.level_zero();
    for _ in 0..n {
        cur = scaled.next(&cur);
    }
    Ok(cur)
}

fn delta_of(set: &CylinderSet) -> Rational {
    if set.has_overlap() {
        Rational::zero()
    } else {
        set.min_gap().expect("a level >= 1 with no overlap has at least two points")
    }
}

/// `Delta_n`: minimal distance `|f_u(0) - f_v(0)|` over distinct words of length `n`.
pub fn delta_n(ifs: &Ifs, n: usize, budget: Budget) -> Result<Rational> {
    if n == 0 {
        return Err(Error::LevelZero);
    }
    Ok(delta_of(&cylinder_points(ifs, n, budget)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityDimension {
    /// `log |Lambda| / log(1/r)`.
    pub sdim: f64,
    /// `min(1, sdim)`.
    pub beta: f64,
}

pub fn similarity_dimension(ifs: &Ifs) -> SimilarityDimension {
    let sdim = (ifs.alphabet_size() as f64).log2() / (-ifs.ratio().log2());
    SimilarityDimension { sdim, beta: sdim.min(1.0) }
}

/// Lower bound `Delta_n >= 1 / (Q * q^n)` whenever `Delta_n > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RationalBound {
    /// Product of the translation denominators.
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub translation_denominators: BigInt,
    /// Denominator of the ratio.
    #[serde(serialize_with = "crate::serde_util::bigint_str")]
    pub ratio_denominator: BigInt,
}

impl RationalBound {
    pub fn bound(&self, n: usize) -> Rational {
        let den = &self.translation_denominators * num_traits::pow(self.ratio_denominator.clone(), n);
        Rational::new(BigInt::one(), den)
    }

    /// `delta * Q * q^n >= 1`, or `delta == 0`.
    pub fn respected_by(&self, n: usize, delta: &Rational) -> bool {
        delta.is_zero() || delta >= &self.bound(n)
    }
}

pub fn rational_separation_bound(ifs: &Ifs) -> RationalBound {
    let q = ifs.translations().iter().fold(BigInt::one(), |acc, a| acc * a.denom());
    RationalBound { translation_denominators: q, ratio_denominator: ifs.ratio().denom().clone() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaEntry {
    pub n: usize,
    pub delta: Rational,
    /// `-log2(Delta_n) / n`; absent when `Delta_n = 0`.
    pub normalized_log: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaReport {
    pub entries: Vec<DeltaEntry>,
    /// Smallest `n` with `Delta_n = 0`.
    pub overlap_level: Option<usize>,
    /// Exponent `k` with `Delta_n ~ 2^(-k n)` at the largest `n`; absent once an overlap occurs.
    pub decay_exponent_estimate: Option<f64>,
    pub bound: RationalBound,
    pub monotone: bool,
    pub bound_respected: bool,
}

pub fn delta_decay_report(ifs: &Ifs, n_max: usize, budget: Budget) -> Result<DeltaReport> {
    if n_max == 0 {
        return Err(Error::LevelZero);
    }
    let levels = cylinder_levels(ifs, n_max, budget)?;
    let bound = rational_separation_bound(ifs);
    let entries: Vec<DeltaEntry> = levels[1..]
        .iter()
        .map(|set| {
            let delta = delta_of(set);
            let normalized_log =
                (!delta.is_zero()).then(|| -delta.log2() / set.level() as f64);
            DeltaEntry { n: set.level(), delta, normalized_log }
        })
        .collect();
    let overlap_level = entries.iter().find(|e| e.delta.is_zero()).map(|e| e.n);
    let decay_exponent_estimate = match overlap_level {
        Some(_) => None,
        None => entries.last().and_then(|e| e.normalized_log),
    };
    let monotone = entries.windows(2).all(|w| w[1].delta <= w[0].delta);
    let bound_respected = entries.iter().all(|e| bound.respected_by(e.n, &e.delta));
    Ok(DeltaReport { entries, overlap_level, decay_exponent_estimate, bound, monotone, bound_respected })
}

/// Checks every point against the hull `[lo, hi]`.
pub fn within_hull(ifs: &Ifs, set: &CylinderSet) -> bool {
    let (lo, hi) = ifs.hull();
    let d = set.denominator();
    let lo_n = lo.numer() * d;
    let hi_n = hi.numer() * d;
    set.numerators().iter().all(|n| {
        let scaled = n * lo.denom();
        let scaled_hi = n * hi.denom();
        scaled >= lo_n && scaled_hi <= hi_n
    })
}
