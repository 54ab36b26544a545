//! Binary trees of fixed height and tree-measures on them.
//!
//! A node at level `l` is an `l`-bit code; its descendants `m` generations
//! down are the codes `sigma eta` with `eta` in `{0,1}^m`. Trees are stored as
//! a sorted array of leaf codes, so a node is a contiguous range of leaves
//! found by binary search.
//!
//! The node distribution picks a level uniformly and then a node of that level
//! with probability equal to its mass. Local statistics (branching,
//! concentration, subtree entropy) are only defined at levels `0..=h-m`, where
//! a full `m`-generation window exists; profiles and averages here are taken
//! over exactly those levels.

use std::ops::Range;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{entropy_bits, DiscreteMeasure, Mass};
use crate::rational::Rational;

/// Largest supported height; leaf codes are `u64`.
pub const MAX_HEIGHT: usize = 62;

/// How a dyadic rational in `[0, 1]` picks between its two binary expansions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftConvention {
    /// Take the expansion ending in 1s: `1/2 -> 0111...`, `1 -> 111...`.
    #[default]
    TerminatesInOnes,
    /// Take the half-open dyadic cell containing the point: `1/2 -> 1000...`. Requires `x < 1`.
    HalfOpen,
}

/// The `h`-bit leaf code of `x` under `convention`.
pub fn leaf_code(x: &Rational, h: usize, convention: LiftConvention) -> Result<u64> {
    if h > MAX_HEIGHT {
        return Err(Error::InvalidParam(format!("tree height {h} exceeds {MAX_HEIGHT}")));
    }
    let one = Rational::one();
    let in_range = match convention {
        LiftConvention::TerminatesInOnes => !x.is_negative() && *x <= one,
        LiftConvention::HalfOpen => !x.is_negative() && *x < one,
    };
    if !in_range {
        return Err(Error::OutOfRange(x.to_string()));
    }
    let scaled = x.numer() << h;
    let code = match convention {
        LiftConvention::TerminatesInOnes if x.is_zero() => BigInt::zero(),
        LiftConvention::TerminatesInOnes => scaled.div_ceil(x.denom()) - 1,
        LiftConvention::HalfOpen => scaled.div_floor(x.denom()),
    };
    Ok(code.to_u64().expect("code fits in h <= 62 bits"))
}

/// A node: `level` bits, value `code`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef {
    pub level: usize,
    pub code: u64,
}

impl NodeRef {
    pub fn root() -> Self {
        NodeRef { level: 0, code: 0 }
    }

    pub fn new(level: usize, code: u64) -> Result<Self> {
        if level > MAX_HEIGHT || code >> level != 0 {
            return Err(Error::InvalidParam(format!("code {code} does not fit in {level} bits")));
        }
        Ok(NodeRef { level, code })
    }

    pub fn child(self, bit: u64) -> Self {
        NodeRef { level: self.level + 1, code: (self.code << 1) | bit }
    }

    /// The binary string of the code, most significant bit first.
    pub fn bits(&self) -> String {
        (0..self.level).rev().map(|i| if self.code >> i & 1 == 1 { '1' } else { '0' }).collect()
    }
}

fn leaf_range(leaves: &[u64], height: usize, node: NodeRef) -> Range<usize> {
    let shift = height - node.level;
    let lo = node.code << shift;
    let hi = (node.code + 1) << shift;
    leaves.partition_point(|&c| c < lo)..leaves.partition_point(|&c| c < hi)
}

/// Runs of consecutive leaves sharing the prefix `leaf >> shift`.
fn prefix_runs(leaves: &[u64], shift: usize) -> Vec<(u64, Range<usize>)> {
    let mut out: Vec<(u64, Range<usize>)> = Vec::new();
    for (i, &c) in leaves.iter().enumerate() {
        let p = c >> shift;
        match out.last_mut() {
            Some((last, r)) if *last == p => r.end = i + 1,
            _ => out.push((p, i..i + 1)),
        }
    }
    out
}

/// A tree of height `h`: the set of all prefixes of its leaves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTree")]
pub struct DyadicTree {
    height: usize,
    leaves: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    height: usize,
    leaves: Vec<u64>,
}

impl TryFrom<RawTree> for DyadicTree {
    type Error = Error;
    fn try_from(raw: RawTree) -> Result<Self> {
        DyadicTree::new(raw.height, raw.leaves)
    }
}

impl DyadicTree {
    pub fn new(height: usize, mut leaves: Vec<u64>) -> Result<Self> {
        if height > MAX_HEIGHT {
            return Err(Error::InvalidParam(format!("tree height {height} exceeds {MAX_HEIGHT}")));
        }
        if leaves.is_empty() {
            return Err(Error::EmptyInput);
        }
        leaves.sort_unstable();
        leaves.dedup();
        if let Some(&bad) = leaves.iter().find(|&&c| c >> height != 0) {
            return Err(Error::InvalidParam(format!("leaf {bad} does not fit in {height} bits")));
        }
        Ok(DyadicTree { height, leaves })
    }

    pub fn full(height: usize) -> Self {
        DyadicTree { height, leaves: (0..1u64 << height).collect() }
    }

    pub fn path(height: usize, code: u64) -> Self {
        DyadicTree { height, leaves: vec![code] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn leaves(&self) -> &[u64] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        node.level <= self.height && !self.node_leaves(node).is_empty()
    }

    /// Number of leaves descended from `node`.
    pub fn descendant_leaves(&self, node: NodeRef) -> usize {
        self.node_leaves(node).len()
    }

    fn node_leaves(&self, node: NodeRef) -> &[u64] {
        &self.leaves[leaf_range(&self.leaves, self.height, node)]
    }

    /// Distinct nodes of `level`, increasing.
    pub fn nodes_at(&self, level: usize) -> Vec<u64> {
        prefix_runs(&self.leaves, self.height - level).into_iter().map(|(p, _)| p).collect()
    }

    /// Number of descendants of `node` exactly `m` generations down.
    pub fn descendants(&self, node: NodeRef, m: usize) -> usize {
        let shift = self.height - node.level - m;
        prefix_runs(self.node_leaves(node), shift).len()
    }

    /// Cuts the tree at `height'`, keeping prefixes.
    pub fn truncate(&self, height: usize) -> DyadicTree {
        let shift = self.height - height;
        let mut leaves: Vec<u64> = self.leaves.iter().map(|c| c >> shift).collect();
        leaves.dedup();
        DyadicTree { height, leaves }
    }
}

/// Masses on the nodes of the full tree of height `h`, given by leaf weights.
///
/// Node masses are sums of leaf weights, so `mass(sigma) = mass(sigma 0) + mass(sigma 1)` and
/// every level sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeMeasure {
    height: usize,
    codes: Vec<u64>,
    weights: Vec<f64>,
}

impl TreeMeasure {
    /// Merges repeated codes. Weights must be positive and sum to one (within 1e-9).
    pub fn new(height: usize, mut leaf_weights: Vec<(u64, f64)>) -> Result<Self> {
        if height > MAX_HEIGHT {
            return Err(Error::InvalidParam(format!("tree height {height} exceeds {MAX_HEIGHT}")));
        }
        if leaf_weights.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((c, w)) = leaf_weights.iter().find(|(c, w)| !(*w > 0.0) || c >> height != 0) {
            return Err(Error::InvalidParam(format!("bad leaf {c} with weight {w}")));
        }
        leaf_weights.sort_by_key(|a| a.0);
        let mut codes: Vec<u64> = Vec::with_capacity(leaf_weights.len());
        let mut weights: Vec<f64> = Vec::with_capacity(leaf_weights.len());
        for (c, w) in leaf_weights {
            if codes.last() == Some(&c) {
                *weights.last_mut().unwrap() += w;
            } else {
                codes.push(c);
                weights.push(w);
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParam(format!("leaf weights sum to {total}, not 1")));
        }
        Ok(TreeMeasure { height, codes, weights })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn leaf_weights(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.codes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn mass(&self, node: NodeRef) -> f64 {
        self.weights[leaf_range(&self.codes, self.height, node)].iter().sum()
    }

    /// Nodes of `level` with positive mass, with their masses.
    pub fn level_masses(&self, level: usize) -> Vec<(u64, f64)> {
        prefix_runs(&self.codes, self.height - level)
            .into_iter()
            .map(|(p, r)| (p, self.weights[r].iter().sum()))
            .collect()
    }

    /// The tree of nodes with positive mass.
    pub fn support(&self) -> DyadicTree {
        DyadicTree { height: self.height, leaves: self.codes.clone() }
    }

    /// `H(∂theta)`, entropy of the leaf distribution in bits.
    pub fn leaf_entropy(&self) -> f64 {
        entropy_bits(self.weights.iter().copied())
    }

    /// Sparse `theta(sigma eta)` for descendants `eta` exactly `m` generations down (unnormalized).
    fn window(&self, range: Range<usize>, level: usize, m: usize) -> Vec<(u64, f64)> {
        let shift = self.height - level - m;
        let mask = (1u64 << m) - 1;
        let codes = &self.codes[range.clone()];
        let weights = &self.weights[range];
        let mut out: Vec<(u64, f64)> = Vec::new();
        for (c, w) in codes.iter().zip(weights) {
            let eta = (c >> shift) & mask;
            match out.last_mut() {
                Some((last, acc)) if *last == eta => *acc += w,
                _ => out.push((eta, *w)),
            }
        }
        out
    }
}

pub fn lift_set(points: &[Rational], h: usize, convention: LiftConvention) -> Result<DyadicTree> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let leaves = points.iter().map(|x| leaf_code(x, h, convention)).collect::<Result<Vec<_>>>()?;
    DyadicTree::new(h, leaves)
}

pub fn lift_measure<W: Mass>(mu: &DiscreteMeasure<W>, h: usize, convention: LiftConvention) -> Result<TreeMeasure> {
    let weights = mu
        .atoms()
        .iter()
        .map(|(x, w)| Ok((leaf_code(x, h, convention)?, w.to_f64())))
        .collect::<Result<Vec<_>>>()?;
    TreeMeasure::new(h, weights)
}

/// `mu_T`: the uniform measure on the leaves of `tree`.
pub fn tree_measure_of_tree(tree: &DyadicTree) -> TreeMeasure {
    let w = 1.0 / tree.leaf_count() as f64;
    TreeMeasure { height: tree.height, codes: tree.leaves.clone(), weights: vec![w; tree.leaf_count()] }
}

fn check_window(theta: &TreeMeasure, sigma: NodeRef, m: usize) -> Result<()> {
    if sigma.level + m > theta.height {
        return Err(Error::DepthExceeded { level: sigma.level, m, height: theta.height });
    }
    Ok(())
}

/// `theta_{sigma,m}(eta) = theta(sigma eta) / theta(sigma)` as a dense vector of length `2^m`.
pub fn subtree_distribution(theta: &TreeMeasure, sigma: NodeRef, m: usize) -> Result<Vec<f64>> {
    check_window(theta, sigma, m)?;
    if m > 24 {
        return Err(Error::InvalidParam(format!("dense distribution on 2^{m} codes is too large")));
    }
    let range = leaf_range(&theta.codes, theta.height, sigma);
    let total: f64 = theta.weights[range.clone()].iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMassNode);
    }
    let mut dense = vec![0.0; 1 << m];
    for (eta, w) in theta.window(range, sigma.level, m) {
        dense[eta as usize] = w / total;
    }
    Ok(dense)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeStats {
    pub full_branching: bool,
    pub set_concentrated: bool,
    /// Shannon entropy of `theta_{sigma,m}` in bits.
    pub entropy: f64,
    /// `entropy / m`.
    pub normalized_entropy: f64,
    pub entropy_concentrated: bool,
    pub entropy_uniform: bool,
}

fn stats_from_window(window: &[(u64, f64)], total: f64, m: usize, eps: f64, branching: usize) -> NodeStats {
    let max = window.iter().map(|w| w.1).fold(0.0, f64::max);
    let entropy = entropy_bits(window.iter().map(|w| w.1 / total));
    let normalized_entropy = entropy / m as f64;
    NodeStats {
        full_branching: branching == 1usize << m,
        // exact equality when eps = 0 avoids rounding in (1 - 0) * total
        set_concentrated: if eps <= 0.0 { window.len() == 1 } else { max >= (1.0 - eps) * total },
        entropy,
        normalized_entropy,
        entropy_concentrated: normalized_entropy < eps,
        entropy_uniform: normalized_entropy > 1.0 - eps,
    }
}

/// Local statistics of `theta` at `sigma` over `m >= 1` generations. Full branching is read off
/// `tree` when given, otherwise off the support of `theta`.
pub fn node_local_stats(
    theta: &TreeMeasure,
    tree: Option<&DyadicTree>,
    sigma: NodeRef,
    m: usize,
    eps: f64,
) -> Result<NodeStats> {
    check_window(theta, sigma, m)?;
    if m == 0 {
        return Err(Error::InvalidParam("local statistics need m >= 1".into()));
    }
    let range = leaf_range(&theta.codes, theta.height, sigma);
    let total: f64 = theta.weights[range.clone()].iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroMassNode);
    }
    let window = theta.window(range, sigma.level, m);
    let branching = match tree {
        Some(t) => t.descendants(sigma, m),
        None => window.len(),
    };
    Ok(stats_from_window(&window, total, m, eps, branching))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub frac_full_branching: f64,
    pub frac_set_concentrated: f64,
    pub frac_entropy_concentrated: f64,
    pub frac_entropy_uniform: f64,
    pub mean_normalized_entropy: f64,
}

/// Per-level statistics, each weighted by `theta` conditioned on the level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelProfile {
    pub height: usize,
    pub m: usize,
    pub eps: f64,
    /// Levels `0..=h-m`.
    pub levels: Vec<LevelStats>,
}

fn level_stats(theta: &TreeMeasure, tree: Option<&DyadicTree>, level: usize, m: usize, eps: f64) -> LevelStats {
    let mut acc = LevelStats {
        level,
        frac_full_branching: 0.0,
        frac_set_concentrated: 0.0,
        frac_entropy_concentrated: 0.0,
        frac_entropy_uniform: 0.0,
        mean_normalized_entropy: 0.0,
    };
    let mut level_total = 0.0;
    for (code, range) in prefix_runs(&theta.codes, theta.height - level) {
        let total: f64 = theta.weights[range.clone()].iter().sum();
        let window = theta.window(range, level, m);
        let branching = match tree {
            Some(t) => t.descendants(NodeRef { level, code }, m),
            None => window.len(),
        };
        let s = stats_from_window(&window, total, m, eps, branching);
        let add = |flag: bool| if flag { total } else { 0.0 };
        acc.frac_full_branching += add(s.full_branching);
        acc.frac_set_concentrated += add(s.set_concentrated);
        acc.frac_entropy_concentrated += add(s.entropy_concentrated);
        acc.frac_entropy_uniform += add(s.entropy_uniform);
        acc.mean_normalized_entropy += total * s.normalized_entropy;
        level_total += total;
    }
    for v in [
        &mut acc.frac_full_branching,
        &mut acc.frac_set_concentrated,
        &mut acc.frac_entropy_concentrated,
        &mut acc.frac_entropy_uniform,
        &mut acc.mean_normalized_entropy,
    ] {
        *v = (*v / level_total).clamp(0.0, 1.0);
    }
    acc
}

pub fn level_profile(theta: &TreeMeasure, tree: Option<&DyadicTree>, m: usize, eps: f64) -> Result<LevelProfile> {
    if m == 0 || m > theta.height {
        return Err(Error::InvalidParam(format!("need 1 <= m <= h, got m={m}, h={}", theta.height)));
    }
    if let Some(t) = tree {
        if t.height() != theta.height {
            return Err(Error::InvalidParam("tree and tree-measure heights differ".into()));
        }
    }
    let levels = (0..=theta.height - m)
        .into_par_iter()
        .map(|level| level_stats(theta, tree, level, m, eps))
        .collect();
    Ok(LevelProfile { height: theta.height, m, eps, levels })
}

/// Which predicates drive the level classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifyMode {
    /// Full branching vs. set concentration.
    Set,
    /// Entropy-uniform vs. entropy-concentrated.
    Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelPartition {
    pub u: Vec<usize>,
    pub v: Vec<usize>,
    pub w: Vec<usize>,
    pub eps: f64,
    pub mode: ClassifyMode,
}

impl LevelPartition {
    /// `|W| / h` for a tree of height `h`.
    pub fn w_fraction(&self, height: usize) -> f64 {
        self.w.len() as f64 / height as f64
    }
}

/// Level goes to `U` when its uniform fraction exceeds `1 - eps` (checked first),
/// else to `V` when its concentration fraction does, else to `W`.
pub fn classify_levels(profile: &LevelProfile, eps: f64, mode: ClassifyMode) -> LevelPartition {
    let mut part = LevelPartition { u: vec![], v: vec![], w: vec![], eps, mode };
    for s in &profile.levels {
        let (uniform, concentrated) = match mode {
            ClassifyMode::Set => (s.frac_full_branching, s.frac_set_concentrated),
            ClassifyMode::Measure => (s.frac_entropy_uniform, s.frac_entropy_concentrated),
        };
        if uniform > 1.0 - eps {
            part.u.push(s.level);
        } else if concentrated > 1.0 - eps {
            part.v.push(s.level);
        } else {
            part.w.push(s.level);
        }
    }
    part
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRule {
    /// `H(∂theta) / h`.
    pub lhs: f64,
    /// Average over levels `0..=h-m` of `E[H(theta_{sigma,m}) / m]`.
    pub rhs: f64,
    pub residual: f64,
}

pub fn chain_rule_check(theta: &TreeMeasure, m: usize) -> Result<ChainRule> {
    let h = theta.height;
    if h == 0 || m == 0 || m > h {
        return Err(Error::InvalidParam(format!("need 1 <= m <= h, got m={m}, h={h}")));
    }
    let lhs = theta.leaf_entropy() / h as f64;
    let level_sum: f64 = (0..=h - m)
        .into_par_iter()
        .map(|level| {
            prefix_runs(&theta.codes, h - level)
                .into_iter()
                .map(|(_, range)| {
                    let total: f64 = theta.weights[range.clone()].iter().sum();
                    let window = theta.window(range, level, m);
                    total * entropy_bits(window.iter().map(|w| w.1 / total))
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    let rhs = level_sum / (m as f64 * (h - m + 1) as f64);
    Ok(ChainRule { lhs, rhs, residual: lhs - rhs })
}

/// `(level, theta(sigma), H(theta_{sigma,m}) / m)` for every node of positive mass at levels `0..=h-m`.
pub fn node_entropies(theta: &TreeMeasure, m: usize) -> Result<Vec<(usize, f64, f64)>> {
    let h = theta.height;
    if m == 0 || m > h {
        return Err(Error::InvalidParam(format!("need 1 <= m <= h, got m={m}, h={h}")));
    }
    Ok((0..=h - m)
        .into_par_iter()
        .flat_map_iter(|level| {
            prefix_runs(&theta.codes, h - level).into_iter().map(move |(_, range)| {
                let total: f64 = theta.weights[range.clone()].iter().sum();
                let window = theta.window(range, level, m);
                (level, total, entropy_bits(window.iter().map(|w| w.1 / total)) / m as f64)
            })
        })
        .collect())
}

/// The node distribution: level uniform on `0..=h`, then node by mass.
pub fn node_distribution(theta: &TreeMeasure) -> Vec<(NodeRef, f64)> {
    let levels = (theta.height + 1) as f64;
    (0..=theta.height)
        .flat_map(|level| {
            theta.level_masses(level).into_iter().map(move |(code, mass)| (NodeRef { level, code }, mass / levels))
        })
        .collect()
}

/// `E_{sigma ~ theta} f(sigma)` under the node distribution.
pub fn node_expectation(theta: &TreeMeasure, f: impl Fn(NodeRef) -> f64) -> f64 {
    node_distribution(theta).into_iter().map(|(n, p)| p * f(n)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationBound {
    /// Probability, under `mu_T` restricted to levels `0..=h-m`, that a node is
    /// `lambda`-concentrated for `m` generations.
    pub concentrated_mass: f64,
    /// `log2 |∂T| / h`.
    pub leaf_exponent: f64,
}

pub fn concentration_bound_check(tree: &DyadicTree, m: usize, lambda: f64) -> Result<ConcentrationBound> {
    let h = tree.height();
    if h == 0 || m == 0 || m > h {
        return Err(Error::InvalidParam(format!("need 1 <= m <= h, got m={m}, h={h}")));
    }
    let theta = tree_measure_of_tree(tree);
    let profile = level_profile(&theta, Some(tree), m, lambda)?;
    let concentrated_mass =
        profile.levels.iter().map(|s| s.frac_set_concentrated).sum::<f64>() / profile.levels.len() as f64;
    Ok(ConcentrationBound { concentrated_mass, leaf_exponent: (tree.leaf_count() as f64).log2() / h as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DiscreteMeasure;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn qs(v: &[&str]) -> Vec<Rational> {
        v.iter().map(|s| q(s)).collect()
    }

    fn abc() -> DyadicTree {
        DyadicTree::new(2, vec![0b00, 0b01, 0b10]).unwrap()
    }

    #[test]
    fn lift_set_examples() {
        let t = lift_set(&qs(&["0", "1/2", "3/4"]), 2, LiftConvention::TerminatesInOnes).unwrap();
        assert_eq!(t.leaves(), &[0b00, 0b01, 0b10]);
        let t = lift_set(&qs(&["1/8", "3/8", "5/8", "7/8"]), 2, LiftConvention::TerminatesInOnes).unwrap();
        assert_eq!(t, DyadicTree::full(2));
        let t = lift_set(&qs(&["0"]), 7, LiftConvention::TerminatesInOnes).unwrap();
        assert_eq!(t, DyadicTree::path(7, 0));
        assert_eq!(leaf_code(&q("1"), 3, LiftConvention::TerminatesInOnes).unwrap(), 0b111);
        assert_eq!(leaf_code(&q("1/2"), 3, LiftConvention::HalfOpen).unwrap(), 0b100);
        assert!(matches!(leaf_code(&q("1"), 3, LiftConvention::HalfOpen), Err(Error::OutOfRange(_))));
        assert!(matches!(leaf_code(&q("-1/3"), 3, LiftConvention::TerminatesInOnes), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn lift_measure_examples() {
        let d = DiscreteMeasure::<Rational>::dirac(q("0"));
        let t = lift_measure(&d, 3, LiftConvention::TerminatesInOnes).unwrap();
        assert_eq!(t.leaf_weights().collect::<Vec<_>>(), vec![(0, 1.0)]);

        let mu = DiscreteMeasure::new(vec![(q("1/8"), q("1/2")), (q("5/8"), q("1/2"))]).unwrap();
        let t = lift_measure(&mu, 1, LiftConvention::TerminatesInOnes).unwrap();
        assert_eq!(t.level_masses(1), vec![(0, 0.5), (1, 0.5)]);

        let odd: Vec<Rational> = (0..8).map(|k| Rational::new(2 * k + 1, 16)).collect();
        let mu = DiscreteMeasure::<Rational>::uniform(&odd).unwrap();
        let t = lift_measure(&mu, 2, LiftConvention::TerminatesInOnes).unwrap();
        assert_eq!(t.level_masses(2), vec![(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]);
    }

    #[test]
    fn uniform_tree_measure_examples() {
        let full = tree_measure_of_tree(&DyadicTree::full(2));
        assert_eq!(full.level_masses(1), vec![(0, 0.5), (1, 0.5)]);
        let t = tree_measure_of_tree(&abc());
        let lv = t.level_masses(1);
        assert!((lv[0].1 - 2.0 / 3.0).abs() < 1e-15 && (lv[1].1 - 1.0 / 3.0).abs() < 1e-15);
        let p = tree_measure_of_tree(&DyadicTree::path(5, 0b10110));
        for level in 0..=5 {
            assert_eq!(p.level_masses(level), vec![(0b10110 >> (5 - level), 1.0)]);
        }
    }

    #[test]
    fn subtree_distribution_examples() {
        let full = tree_measure_of_tree(&DyadicTree::full(3));
        assert_eq!(subtree_distribution(&full, NodeRef::new(1, 1).unwrap(), 1).unwrap(), vec![0.5, 0.5]);
        let t = tree_measure_of_tree(&abc());
        let d = subtree_distribution(&t, NodeRef::root(), 2).unwrap();
        let third = 1.0 / 3.0;
        assert!(d.iter().zip([third, third, third, 0.0]).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(matches!(
            subtree_distribution(&t, NodeRef::new(2, 0).unwrap(), 1),
            Err(Error::DepthExceeded { level: 2, m: 1, height: 2 })
        ));
        assert!(matches!(subtree_distribution(&t, NodeRef::new(2, 3).unwrap(), 0), Err(Error::ZeroMassNode)));
    }

    #[test]
    fn node_stats_examples() {
        let full = DyadicTree::full(4);
        let s = node_local_stats(&tree_measure_of_tree(&full), Some(&full), NodeRef::root(), 3, 1e-6).unwrap();
        assert!(s.full_branching && s.entropy_uniform);
        assert_eq!(s.normalized_entropy, 1.0);

        let path = DyadicTree::path(4, 5);
        let s = node_local_stats(&tree_measure_of_tree(&path), Some(&path), NodeRef::root(), 2, 0.0).unwrap();
        assert!(s.set_concentrated && !s.full_branching);
        assert_eq!(s.normalized_entropy, 0.0);

        let theta = TreeMeasure::new(1, vec![(0, 0.9), (1, 0.1)]).unwrap();
        let s = node_local_stats(&theta, None, NodeRef::root(), 1, 0.1).unwrap();
        let h = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
        assert!((s.normalized_entropy - h).abs() < 1e-12);
        assert!((s.normalized_entropy - 0.469).abs() < 1e-3);
        assert!(s.set_concentrated);
        assert!(!node_local_stats(&theta, None, NodeRef::root(), 1, 0.05).unwrap().set_concentrated);
    }

    #[test]
    fn profile_and_classification_extremes() {
        let full = DyadicTree::full(6);
        let p = level_profile(&tree_measure_of_tree(&full), Some(&full), 2, 0.1).unwrap();
        assert_eq!(p.levels.len(), 5);
        assert!(p.levels.iter().all(|s| s.frac_full_branching == 1.0));
        let part = classify_levels(&p, 0.1, ClassifyMode::Set);
        assert_eq!(part.u, vec![0, 1, 2, 3, 4]);

        let path = DyadicTree::path(6, 0b101100);
        let p = level_profile(&tree_measure_of_tree(&path), Some(&path), 1, 0.1).unwrap();
        assert!(p.levels.iter().all(|s| s.frac_set_concentrated == 1.0));
        let part = classify_levels(&p, 0.1, ClassifyMode::Set);
        assert_eq!(part.v.len(), 6);
        assert!(part.u.is_empty() && part.w.is_empty());
    }

    #[test]
    fn chain_rule_examples() {
        let c = chain_rule_check(&tree_measure_of_tree(&DyadicTree::full(2)), 1).unwrap();
        assert_eq!((c.lhs * 2.0, c.rhs * 2.0), (2.0, 2.0));

        let c = chain_rule_check(&tree_measure_of_tree(&abc()), 1).unwrap();
        let split = -(2.0 / 3.0f64 * (2.0 / 3.0f64).log2() + 1.0 / 3.0 * (1.0 / 3.0f64).log2());
        let expected = split + 2.0 / 3.0 * 1.0;
        assert!((c.lhs * 2.0 - 3f64.log2()).abs() < 1e-12);
        assert!((c.rhs * 2.0 - expected).abs() < 1e-12);

        let c = chain_rule_check(&tree_measure_of_tree(&abc()), 2).unwrap();
        assert!(c.residual.abs() < 1e-15);
    }

    #[test]
    fn node_distribution_matches_definition() {
        let theta = tree_measure_of_tree(&abc());
        // (1/(h+1)) sum_k sum_sigma mu(sigma) f(sigma) with f = level
        let e = node_expectation(&theta, |n| n.level as f64);
        assert!((e - (0.0 + 1.0 + 2.0) / 3.0).abs() < 1e-15);
        let total: f64 = node_distribution(&theta).iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-15);
        // probability that a node has two children in T
        let two = node_expectation(&theta, |n| (n.level < 2 && abc().descendants(n, 1) == 2) as u8 as f64);
        assert!((two - (1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn concentration_bound_examples() {
        let c = concentration_bound_check(&DyadicTree::path(5, 3), 1, 0.25).unwrap();
        assert_eq!((c.concentrated_mass, c.leaf_exponent), (1.0, 0.0));
        let c = concentration_bound_check(&DyadicTree::full(5), 1, 0.25).unwrap();
        assert_eq!((c.concentrated_mass, c.leaf_exponent), (0.0, 1.0));

        // Spine: at each level the node 0...0 branches, its 1-child runs straight down.
        let h = 4;
        let leaves: Vec<u64> = (0..h).map(|i| 1u64 << (h - 1 - i)).chain([0]).collect();
        let spine = DyadicTree::new(h, leaves).unwrap();
        assert_eq!(spine.leaf_count(), 5);
        // Level i: spine node has mass (h+1-i)/(h+1) and splits 1 : (h-i); other nodes are paths.
        let lambda = 0.3;
        let mut expected = 0.0;
        for i in 0..h {
            let spine_mass = (h + 1 - i) as f64 / (h + 1) as f64;
            let big = (h - i) as f64 / (h + 1 - i) as f64;
            let spine_conc = if big >= 1.0 - lambda { spine_mass } else { 0.0 };
            expected += spine_conc + (1.0 - spine_mass);
        }
        expected /= h as f64;
        let c = concentration_bound_check(&spine, 1, lambda).unwrap();
        assert!((c.concentrated_mass - expected).abs() < 1e-12);
        assert!((c.leaf_exponent - 5f64.log2() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn tree_json_shape() {
        let s = serde_json::to_string(&abc()).unwrap();
        assert_eq!(s, r#"{"height":2,"leaves":[0,1,2]}"#);
        assert!(serde_json::from_str::<DyadicTree>(r#"{"height":2,"leaves":[4]}"#).is_err());
    }
}
