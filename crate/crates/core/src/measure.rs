//! Finitely supported probability measures on the line with exact atom positions.
//!
//! Weights are generic over [`Mass`]: exact [`Rational`] weights for identity
//! checks, `f64` weights for everything else. Entropy is always evaluated in
//! floating point, in bits.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::covering::GridSpec;
use crate::error::{Budget, Error, Result};
use crate::rational::Rational;

/// A probability weight.
pub trait Mass: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn is_positive(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Whether a total weight is acceptably close to one.
    fn is_unit(&self) -> bool;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> std::result::Result<Self, String>;
}

impl Mass for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_positive(&self) -> bool {
        Rational::is_positive(self)
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn is_unit(&self) -> bool {
        *self == Rational::one()
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> std::result::Result<Self, String> {
        match v {
            Value::String(s) => s.parse().map_err(|e| format!("{e}")),
            other => Err(format!("exact weight must be a \"p/q\" string, got {other}")),
        }
    }
}

impl Mass for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn is_positive(&self) -> bool {
        *self > 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_unit(&self) -> bool {
        (self - 1.0).abs() <= 1e-12
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self).map(Value::Number).unwrap_or(Value::Null)
    }
    fn from_json(v: &Value) -> std::result::Result<Self, String> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad weight {n}")),
            Value::String(s) => s.parse::<Rational>().map(|r| r.to_f64()).map_err(|e| format!("{e}")),
            other => Err(format!("weight must be a number or \"p/q\" string, got {other}")),
        }
    }
}

/// A probability measure `sum_i w_i delta_{x_i}` with strictly increasing positions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure<W: Mass = Rational> {
    atoms: Vec<(Rational, W)>,
}

/// Sorts by position and merges equal positions.
fn merge_atoms<W: Mass>(mut atoms: Vec<(Rational, W)>) -> Vec<(Rational, W)> {
    atoms.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(Rational, W)> = Vec::with_capacity(atoms.len());
    for (x, w) in atoms {
        match out.last_mut() {
            Some((last, acc)) if *last == x => *acc = acc.add(&w),
            _ => out.push((x, w)),
        }
    }
    out
}

impl<W: Mass> DiscreteMeasure<W> {
    /// Merges atoms at equal positions and checks that weights are positive and sum to one.
    pub fn new(atoms: Vec<(Rational, W)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((x, w)) = atoms.iter().find(|(_, w)| !w.is_positive()) {
            return Err(Error::InvalidParam(format!("atom at {x} has non-positive weight {w:?}")));
        }
        let atoms = merge_atoms(atoms);
        let total = atoms.iter().fold(W::zero(), |acc, (_, w)| acc.add(w));
        if !total.is_unit() {
            return Err(Error::InvalidParam(format!("weights sum to {total:?}, not 1")));
        }
        Ok(DiscreteMeasure { atoms })
    }

    /// Builds from atoms already sorted, distinct and normalized.
    pub(crate) fn from_sorted_unchecked(atoms: Vec<(Rational, W)>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
        DiscreteMeasure { atoms }
    }

    pub fn dirac(x: Rational) -> Self {
        DiscreteMeasure { atoms: vec![(x, W::one())] }
    }

    /// Equal weights on the distinct points given.
    pub fn uniform(points: &[Rational]) -> Result<Self>
    where
        W: From<UniformWeight>,
    {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut pts = points.to_vec();
        pts.sort();
        pts.dedup();
        let w = W::from(UniformWeight(pts.len()));
        Ok(DiscreteMeasure { atoms: pts.into_iter().map(|x| (x, w.clone())).collect() })
    }

    pub fn atoms(&self) -> &[(Rational, W)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn support(&self) -> Vec<Rational> {
        self.atoms.iter().map(|(x, _)| x.clone()).collect()
    }

    pub fn total_mass(&self) -> W {
        self.atoms.iter().fold(W::zero(), |acc, (_, w)| acc.add(w))
    }

    pub fn to_float(&self) -> DiscreteMeasure<f64> {
        DiscreteMeasure { atoms: self.atoms.iter().map(|(x, w)| (x.clone(), w.to_f64())).collect() }
    }

    /// Mass of `[start, start + width)`.
    pub fn interval_mass(&self, start: &Rational, width: &Rational) -> W {
        let end = start + width;
        self.atoms
            .iter()
            .filter(|(x, _)| x >= start && *x < end)
            .fold(W::zero(), |acc, (_, w)| acc.add(w))
    }
}

/// Weight `1/k` for a uniform measure on `k` points.
pub struct UniformWeight(pub usize);

impl From<UniformWeight> for Rational {
    fn from(u: UniformWeight) -> Self {
        Rational::new(1, u.0 as i64)
    }
}

impl From<UniformWeight> for f64 {
    fn from(u: UniformWeight) -> Self {
        1.0 / u.0 as f64
    }
}

impl<W: Mass> Serialize for DiscreteMeasure<W> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Atom<'a> {
            x: &'a Rational,
            w: Value,
        }
        let list: Vec<Atom> = self.atoms.iter().map(|(x, w)| Atom { x, w: w.to_json() }).collect();
        list.serialize(serializer)
    }
}

impl<'de, W: Mass> Deserialize<'de> for DiscreteMeasure<W> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawAtom {
            x: Rational,
            w: Value,
        }
        let raw: Vec<RawAtom> = Vec::deserialize(deserializer)?;
        let atoms = raw
            .into_iter()
            .map(|a| W::from_json(&a.w).map(|w| (a.x, w)))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        DiscreteMeasure::new(atoms).map_err(D::Error::custom)
    }
}

/// `mu * nu = sum_{i,j} p_i q_j delta_{x_i + y_j}`.
pub fn convolve<W: Mass>(mu: &DiscreteMeasure<W>, nu: &DiscreteMeasure<W>, budget: Budget) -> Result<DiscreteMeasure<W>> {
    budget.check(mu.len() as u128 * nu.len() as u128)?;
    let atoms: Vec<(Rational, W)> = mu
        .atoms
        .iter()
        .flat_map(|(x, p)| nu.atoms.iter().map(move |(y, q)| (x + y, p.mul(q))))
        .collect();
    Ok(DiscreteMeasure { atoms: merge_atoms(atoms) })
}

/// Push-forward under `x -> t x + c`.
pub fn affine_push<W: Mass>(mu: &DiscreteMeasure<W>, t: &Rational, c: &Rational) -> Result<DiscreteMeasure<W>> {
    if t.is_zero() {
        return Err(Error::ZeroScale);
    }
    let mut atoms: Vec<(Rational, W)> = mu.atoms.iter().map(|(x, w)| (t * x + c, w.clone())).collect();
    if t.is_negative() {
        atoms.reverse();
    }
    Ok(DiscreteMeasure { atoms })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridEntropy {
    /// `-sum p log2 p` over cell masses.
    pub bits: f64,
    /// `bits / log2(1/eps)`; absent when `eps >= 1`.
    pub normalized: Option<f64>,
}

pub(crate) fn entropy_bits(masses: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = masses.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    // -0.0 and tiny negative rounding both clamp to zero
    h.max(0.0)
}

/// Entropy of integer counts, `log2 T - (1/T) sum c log2 c`.
pub(crate) fn count_entropy_bits(counts: impl IntoIterator<Item = u128>) -> f64 {
    let counts: Vec<u128> = counts.into_iter().filter(|&c| c > 0).collect();
    let total: u128 = counts.iter().sum();
    if counts.len() <= 1 {
        return 0.0;
    }
    let t = total as f64;
    let s: f64 = counts.iter().map(|&c| c as f64 * (c as f64).log2()).sum();
    (t.log2() - s / t).max(0.0)
}

pub(crate) fn normalize_by_scale(bits: f64, epsilon: &Rational) -> Option<f64> {
    let denom = -epsilon.log2();
    (denom > 0.0).then(|| bits / denom)
}

/// Shannon entropy of the cell masses of `mu` on the grid `[k eps, (k+1) eps)`.
pub fn grid_entropy<W: Mass>(mu: &DiscreteMeasure<W>, grid: &GridSpec) -> GridEntropy {
    let mut cells: BTreeMap<BigInt, f64> = BTreeMap::new();
    for (x, w) in &mu.atoms {
        *cells.entry(grid.cell(x)).or_insert(0.0) += w.to_f64();
    }
    let bits = entropy_bits(cells.into_values());
    GridEntropy { bits, normalized: normalize_by_scale(bits, &grid.epsilon) }
}

/// Conditional measure on `[start, start + width)`.
pub fn conditional_measure<W: Mass>(mu: &DiscreteMeasure<W>, start: &Rational, width: &Rational) -> Result<DiscreteMeasure<W>> {
    let end = start + width;
    let inside: Vec<(Rational, W)> =
        mu.atoms.iter().filter(|(x, _)| x >= start && *x < end).cloned().collect();
    let total = inside.iter().fold(W::zero(), |acc, (_, w)| acc.add(w));
    if !total.is_positive() {
        return Err(Error::ZeroMassInterval);
    }
    Ok(DiscreteMeasure { atoms: inside.into_iter().map(|(x, w)| (x, w.div(&total))).collect() })
}

/// `H(mu * mu, grid) - H(mu, grid)` in bits.
pub fn entropy_doubling<W: Mass>(mu: &DiscreteMeasure<W>, grid: &GridSpec, budget: Budget) -> Result<f64> {
    let sq = convolve(mu, mu, budget)?;
    Ok(grid_entropy(&sq, grid).bits - grid_entropy(mu, grid).bits)
}

/// Atoms `numerator / denominator` carrying integer counts; the measure is counts / total.
///
/// Used for word-counting measures such as `mu^(n)` where every weight is a
/// multiplicity over `|Lambda|^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CountMeasure {
    pub denominator: BigInt,
    pub atoms: Vec<(BigInt, u128)>,
}

impl CountMeasure {
    pub fn total(&self) -> u128 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `self * S_t other`, merged.
    pub fn convolve_scaled(&self, other: &CountMeasure, t: &Rational) -> CountMeasure {
        let d2 = t.denom() * &other.denominator;
        let denominator = self.denominator.lcm(&d2);
        let fa = &denominator / &self.denominator;
        let fb = (&denominator / &d2) * t.numer();
        let right: Vec<(BigInt, u128)> = other.atoms.iter().map(|(b, c)| (b * &fb, *c)).collect();
        let mut atoms: Vec<(BigInt, u128)> = self
            .atoms
            .iter()
            .flat_map(|(a, ca)| {
                let base = a * &fa;
                right.iter().map(move |(b, cb)| (&base + b, ca * cb))
            })
            .collect();
        atoms.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(BigInt, u128)> = Vec::with_capacity(atoms.len());
        for (x, c) in atoms {
            match merged.last_mut() {
                Some((last, acc)) if *last == x => *acc += c,
                _ => merged.push((x, c)),
            }
        }
        CountMeasure { denominator, atoms: merged }
    }

    /// Counts per half-open grid cell of width `eps`, in cell order.
    pub fn cell_counts(&self, epsilon: &Rational) -> Vec<(BigInt, u128)> {
        let div = &self.denominator * epsilon.numer();
        let mut out: Vec<(BigInt, u128)> = Vec::new();
        for (x, c) in &self.atoms {
            let cell = (x * epsilon.denom()).div_floor(&div);
            match out.last_mut() {
                Some((last, acc)) if *last == cell => *acc += c,
                _ => out.push((cell, *c)),
            }
        }
        out
    }

    pub fn grid_entropy_bits(&self, epsilon: &Rational) -> f64 {
        count_entropy_bits(self.cell_counts(epsilon).into_iter().map(|c| c.1))
    }

    pub fn to_measure(&self) -> DiscreteMeasure<Rational> {
        let total = BigInt::from(self.total());
        DiscreteMeasure::from_sorted_unchecked(
            self.atoms
                .iter()
                .map(|(x, c)| {
                    (Rational::new(x.clone(), self.denominator.clone()), Rational::new(BigInt::from(*c), total.clone()))
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn m(atoms: &[(&str, &str)]) -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(atoms.iter().map(|(x, w)| (q(x), q(w))).collect()).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(DiscreteMeasure::<Rational>::new(vec![(q("0"), q("1/2"))]).is_err());
        assert!(DiscreteMeasure::<Rational>::new(vec![(q("0"), q("3/2")), (q("1"), q("-1/2"))]).is_err());
        let merged = m(&[("1/2", "1/4"), ("0", "1/2"), ("1/2", "1/4")]);
        assert_eq!(merged.atoms(), &[(q("0"), q("1/2")), (q("1/2"), q("1/2"))]);
    }

    #[test]
    fn convolution_examples() {
        let nu = m(&[("1/3", "1/3"), ("1", "2/3")]);
        let id = convolve(&DiscreteMeasure::dirac(q("0")), &nu, Budget::default()).unwrap();
        assert_eq!(id, nu);

        let half = m(&[("0", "1/2"), ("1/2", "1/2")]);
        let sq = convolve(&half, &half, Budget::default()).unwrap();
        assert_eq!(sq, m(&[("0", "1/4"), ("1/2", "1/2"), ("1", "1/4")]));

        assert!(matches!(convolve(&half, &half, Budget(3)), Err(Error::BudgetExceeded { required: 4, .. })));
    }

    #[test]
    fn affine_push_examples() {
        let mu = m(&[("0", "1/2"), ("2/3", "1/2")]);
        assert_eq!(affine_push(&mu, &q("1"), &q("0")).unwrap(), mu);
        let d = DiscreteMeasure::<Rational>::dirac(q("2/3"));
        assert_eq!(affine_push(&d, &q("1/3"), &q("0")).unwrap(), DiscreteMeasure::dirac(q("2/9")));
        assert!(matches!(affine_push(&mu, &q("0"), &q("1")), Err(Error::ZeroScale)));
        let flipped = affine_push(&mu, &q("-1"), &q("1")).unwrap();
        assert_eq!(flipped.support(), vec![q("1/3"), q("1")]);
    }

    #[test]
    fn grid_entropy_examples() {
        let g = GridSpec::new(q("1/2")).unwrap();
        assert_eq!(grid_entropy(&DiscreteMeasure::<Rational>::dirac(q("1/3")), &g).bits, 0.0);
        let e = grid_entropy(&m(&[("1/8", "1/2"), ("5/8", "1/2")]), &g);
        assert_eq!(e.bits, 1.0);
        assert_eq!(e.normalized, Some(1.0));
        let coarse = GridSpec::new(q("2")).unwrap();
        assert_eq!(grid_entropy(&m(&[("1/8", "1/2"), ("5/8", "1/2")]), &coarse).normalized, None);
    }

    #[test]
    fn conditional_examples() {
        let mu = m(&[("0", "1/2"), ("2/3", "1/2")]);
        assert_eq!(conditional_measure(&mu, &q("0"), &q("1")).unwrap(), mu);
        assert_eq!(conditional_measure(&mu, &q("1/2"), &q("1/2")).unwrap(), DiscreteMeasure::dirac(q("2/3")));
        assert!(matches!(conditional_measure(&mu, &q("1/4"), &q("1/4")), Err(Error::ZeroMassInterval)));
    }

    #[test]
    fn doubling_examples() {
        let g = GridSpec::new(q("1/64")).unwrap();
        let d = DiscreteMeasure::<Rational>::dirac(q("1/5"));
        assert_eq!(entropy_doubling(&d, &g, Budget::default()).unwrap(), 0.0);

        let ap: Vec<Rational> = (0..64).map(|k| Rational::new(k, 64)).collect();
        let u = DiscreteMeasure::<f64>::uniform(&ap).unwrap();
        let gap = entropy_doubling(&u, &g, Budget::default()).unwrap();
        // Oracle: the triangular law on 127 points, evaluated directly.
        let tri: f64 = (1..=127u32)
            .map(|j| {
                let c = j.min(128 - j) as f64 / 4096.0;
                -c * c.log2()
            })
            .sum();
        assert!((gap - (tri - 6.0)).abs() < 1e-12);
        assert!(gap > 0.0 && gap < 1.0);
    }

    #[test]
    fn json_round_trip_and_float_weights() {
        let mu = m(&[("0", "1/3"), ("1/2", "2/3")]);
        let s = serde_json::to_string(&mu).unwrap();
        assert_eq!(s, r#"[{"x":"0","w":"1/3"},{"x":"1/2","w":"2/3"}]"#);
        assert_eq!(serde_json::from_str::<DiscreteMeasure<Rational>>(&s).unwrap(), mu);

        let f: DiscreteMeasure<f64> = serde_json::from_str(r#"[{"x":"1/4","w":0.25},{"x":"3/4","w":"3/4"}]"#).unwrap();
        assert_eq!(f.atoms()[1].1, 0.75);
        assert!(serde_json::from_str::<DiscreteMeasure<Rational>>(r#"[{"x":"0","w":1.0}]"#).is_err());
    }

    #[test]
    fn count_entropy_matches_float_entropy() {
        let counts = [3u128, 1, 4, 1, 5];
        let total: u128 = counts.iter().sum();
        let direct = entropy_bits(counts.iter().map(|&c| c as f64 / total as f64));
        assert!((count_entropy_bits(counts) - direct).abs() < 1e-12);
    }
}
