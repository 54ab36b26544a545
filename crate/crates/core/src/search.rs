//! Search for trees violating the leaf-count "product bound".
//!
//! Nodes at levels `0..=h-m` of a tree `T` are classified by their exact number
//! `D` of descendants `m` generations down; a class has exponent
//! `c = log2(D) / m` and mass `p` under the node distribution of `mu_T`. The
//! claimed bound is `|∂T| <= prod_i 2^{c_i p_i h}`, which fails already for
//! small trees.
//!
//! Exhaustive mode enumerates trees up to sibling exchange. A tree of height
//! `k` is a root with one child subtree or an unordered pair of subtrees of
//! height `k-1`, so there are `t(k) = t(k-1) + t(k-1)(t(k-1)+1)/2` of them.
//! The exponent depends on the tree only through
//! `F = sum_sigma leaves(sigma) log2 D_m(sigma)`, which composes bottom-up:
//! `log2 bound = h F / ((h+1) m L)`.

use std::collections::BTreeMap;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Budget, Error, Result};
use crate::tree::{DyadicTree, NodeRef};

/// Exhaustive search is capped at this height (and in practice by the budget).
pub const MAX_EXHAUSTIVE_HEIGHT: usize = 8;
/// Random trees are drawn as leaf subsets of `{0,1}^h`.
pub const MAX_RANDOM_HEIGHT: usize = 16;
/// A violation must beat `log2 |∂T|` by more than this.
pub const VIOLATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SearchMode {
    Exhaustive,
    Random { seed: u64, trials: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeClass {
    /// Exact number of descendants `m` generations down.
    pub descendants: u64,
    /// `log2(descendants) / m`.
    pub c: f64,
    /// Node-distribution mass of the class.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductBoundInstance {
    pub tree: DyadicTree,
    pub m: usize,
    pub classes: Vec<NodeClass>,
    /// `log2 prod 2^{c_i p_i h}`.
    pub log2_bound: f64,
    pub bound: f64,
    /// `|∂T|`.
    pub actual: u64,
    /// `log2_bound - log2(actual)`; positive means the bound fails.
    pub excess: f64,
}

impl ProductBoundInstance {
    pub fn is_violation(&self) -> bool {
        self.excess > VIOLATION_TOLERANCE
    }
}

/// Evaluates the product bound on one tree directly from its node classes.
pub fn product_bound_instance(tree: &DyadicTree, m: usize) -> Result<ProductBoundInstance> {
    if m == 0 {
        return Err(Error::InvalidParam("product bound needs m >= 1".into()));
    }
    let h = tree.height();
    let total = tree.leaf_count() as f64;
    let mut classes: BTreeMap<u64, f64> = BTreeMap::new();
    if m <= h {
        for level in 0..=h - m {
            for code in tree.nodes_at(level) {
                let node = NodeRef { level, code };
                let p = tree.descendant_leaves(node) as f64 / total / (h + 1) as f64;
                *classes.entry(tree.descendants(node, m) as u64).or_insert(0.0) += p;
            }
        }
    }
    let classes: Vec<NodeClass> = classes
        .into_iter()
        .map(|(descendants, p)| NodeClass { descendants, c: (descendants as f64).log2() / m as f64, p })
        .collect();
    let log2_bound = h as f64 * classes.iter().map(|c| c.c * c.p).sum::<f64>();
    let actual = tree.leaf_count() as u64;
    Ok(ProductBoundInstance {
        tree: tree.clone(),
        m,
        log2_bound,
        bound: log2_bound.exp2(),
        actual,
        excess: log2_bound - (actual as f64).log2(),
        classes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeightSummary {
    pub height: usize,
    pub trees: u64,
    pub violations: u64,
    pub max_excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductBoundReport {
    pub mode: SearchMode,
    pub h_max: usize,
    pub m: usize,
    pub heights: Vec<HeightSummary>,
    /// Largest violations first (ties in enumeration order), at most `max_instances`.
    pub instances: Vec<ProductBoundInstance>,
}

impl ProductBoundReport {
    pub fn total_violations(&self) -> u64 {
        self.heights.iter().map(|h| h.violations).sum()
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Leaf,
    Single(u32),
    Pair(u32, u32),
}

struct Summary {
    leaves: u64,
    f: f64,
    /// `depth[j]`: nodes `j` generations below the root, `j <= m`.
    depth: Vec<u64>,
}

/// Number of canonical trees of each height `0..=h`, saturating.
pub fn canonical_tree_counts(h: usize) -> Vec<u128> {
    let mut t = vec![1u128];
    for k in 1..=h {
        let p = t[k - 1];
        t.push(p.saturating_add(p.saturating_mul(p.saturating_add(1)) / 2));
    }
    t
}

fn combine(height: usize, m: usize, a: &Summary, b: Option<&Summary>) -> Summary {
    let mut depth = vec![0u64; m + 1];
    depth[0] = 1;
    for j in 1..=m {
        depth[j] = a.depth[j - 1] + b.map_or(0, |b| b.depth[j - 1]);
    }
    let leaves = a.leaves + b.map_or(0, |b| b.leaves);
    let mut f = a.f + b.map_or(0.0, |b| b.f);
    if height >= m {
        f += leaves as f64 * (depth[m] as f64).log2();
    }
    Summary { leaves, f, depth }
}

/// `(L, F)` of the root combination, without allocating.
fn root_f(height: usize, m: usize, a: &Summary, b: Option<&Summary>) -> (u64, f64) {
    let leaves = a.leaves + b.map_or(0, |b| b.leaves);
    let mut f = a.f + b.map_or(0.0, |b| b.f);
    if height >= m {
        let d = a.depth[m - 1] + b.map_or(0, |b| b.depth[m - 1]);
        f += leaves as f64 * (d as f64).log2();
    }
    (leaves, f)
}

fn excess_of(h: usize, m: usize, leaves: u64, f: f64) -> f64 {
    h as f64 * f / ((h + 1) as f64 * m as f64 * leaves as f64) - (leaves as f64).log2()
}

struct Catalog {
    shapes: Vec<Vec<Shape>>,
    summaries: Vec<Vec<Summary>>,
}

impl Catalog {
    fn build(max_height: usize, m: usize) -> Catalog {
        let leaf = Summary { leaves: 1, f: 0.0, depth: (0..=m).map(|j| u64::from(j == 0)).collect() };
        let mut shapes = vec![vec![Shape::Leaf]];
        let mut summaries = vec![vec![leaf]];
        for k in 1..=max_height {
            let prev = &summaries[k - 1];
            let mut sh = Vec::new();
            let mut su = Vec::new();
            for (i, a) in prev.iter().enumerate() {
                sh.push(Shape::Single(i as u32));
                su.push(combine(k, m, a, None));
            }
            for i in 0..prev.len() {
                for j in 0..=i {
                    sh.push(Shape::Pair(i as u32, j as u32));
                    su.push(combine(k, m, &prev[i], Some(&prev[j])));
                }
            }
            shapes.push(sh);
            summaries.push(su);
        }
        Catalog { shapes, summaries }
    }

    fn leaves(&self, height: usize, shape: Shape) -> Vec<u64> {
        match shape {
            Shape::Leaf => vec![0],
            Shape::Single(i) => self.leaves(height - 1, self.shapes[height - 1][i as usize]),
            Shape::Pair(i, j) => {
                let mut out = self.leaves(height - 1, self.shapes[height - 1][i as usize]);
                let high = 1u64 << (height - 1);
                out.extend(self.leaves(height - 1, self.shapes[height - 1][j as usize]).into_iter().map(|c| c | high));
                out
            }
        }
    }
}

#[derive(Clone, Copy)]
struct Hit {
    index: u64,
    excess: f64,
    shape: Shape,
}

fn keep_best(hits: &mut Vec<Hit>, k: usize) {
    hits.sort_by(|a, b| b.excess.total_cmp(&a.excess).then(a.index.cmp(&b.index)));
    hits.truncate(k);
}

#[derive(Default)]
struct Tally {
    trees: u64,
    violations: u64,
    max_excess: f64,
    best: Vec<Hit>,
}

impl Tally {
    fn record(&mut self, index: u64, excess: f64, shape: Shape, k: usize) {
        if self.trees == 0 || excess > self.max_excess {
            self.max_excess = excess;
        }
        self.trees += 1;
        if excess > VIOLATION_TOLERANCE {
            self.violations += 1;
            if k > 0 {
                self.best.push(Hit { index, excess, shape });
                if self.best.len() >= 4 * k {
                    keep_best(&mut self.best, k);
                }
            }
        }
    }

    fn merge(mut self, other: Tally, k: usize) -> Tally {
        if other.trees > 0 && (self.trees == 0 || other.max_excess > self.max_excess) {
            self.max_excess = other.max_excess;
        }
        self.trees += other.trees;
        self.violations += other.violations;
        self.best.extend(other.best);
        keep_best(&mut self.best, k);
        self
    }
}

fn exhaustive_height(cat: &Catalog, h: usize, m: usize, k: usize) -> Tally {
    if h == 0 {
        let mut t = Tally::default();
        t.record(0, 0.0, Shape::Leaf, k);
        return t;
    }
    let prev = &cat.summaries[h - 1];
    let n = prev.len() as u64;
    let singles = prev
        .par_iter()
        .enumerate()
        .fold(Tally::default, |mut t, (i, a)| {
            let (leaves, f) = root_f(h, m, a, None);
            t.record(i as u64, excess_of(h, m, leaves, f), Shape::Single(i as u32), k);
            t
        })
        .reduce(Tally::default, |a, b| a.merge(b, k));
    let pairs = (0..prev.len())
        .into_par_iter()
        .fold(Tally::default, |mut t, i| {
            let base = n + (i as u64) * (i as u64 + 1) / 2;
            for j in 0..=i {
                let (leaves, f) = root_f(h, m, &prev[i], Some(&prev[j]));
                t.record(base + j as u64, excess_of(h, m, leaves, f), Shape::Pair(i as u32, j as u32), k);
            }
            t
        })
        .reduce(Tally::default, |a, b| a.merge(b, k));
    singles.merge(pairs, k)
}

/// Searches for trees with `prod 2^{c_i p_i h} > |∂T|`, heights `0..=h_max`.
///
/// The budget bounds the number of trees evaluated. An empty `instances` list with zero
/// violations means no violation exists up to the bounds searched.
pub fn product_bound_search(
    h_max: usize,
    m: usize,
    mode: SearchMode,
    max_instances: usize,
    budget: Budget,
) -> Result<ProductBoundReport> {
    if m == 0 {
        return Err(Error::InvalidParam("product bound needs m >= 1".into()));
    }
    match mode {
        SearchMode::Exhaustive => exhaustive(h_max, m, max_instances, budget),
        SearchMode::Random { seed, trials } => random(h_max, m, seed, trials, max_instances, budget),
    }
}

fn exhaustive(h_max: usize, m: usize, k: usize, budget: Budget) -> Result<ProductBoundReport> {
    if h_max > MAX_EXHAUSTIVE_HEIGHT {
        return Err(Error::InvalidParam(format!("exhaustive search is limited to h <= {MAX_EXHAUSTIVE_HEIGHT}")));
    }
    let counts = canonical_tree_counts(h_max);
    budget.check(counts.iter().fold(0u128, |a, &c| a.saturating_add(c)))?;
    let cat = Catalog::build(h_max.saturating_sub(1), m);
    let mut heights = Vec::new();
    let mut best: Vec<(usize, Hit)> = Vec::new();
    for h in 0..=h_max {
        let tally = exhaustive_height(&cat, h, m, k);
        heights.push(HeightSummary { height: h, trees: tally.trees, violations: tally.violations, max_excess: tally.max_excess });
        best.extend(tally.best.into_iter().map(|hit| (h, hit)));
    }
    best.sort_by(|a, b| b.1.excess.total_cmp(&a.1.excess).then(a.0.cmp(&b.0)).then(a.1.index.cmp(&b.1.index)));
    best.truncate(k);
    let mut instances = best
        .into_iter()
        .map(|(h, hit)| {
            let leaves = if h == 0 { vec![0] } else { cat.leaves(h, hit.shape) };
            product_bound_instance(&DyadicTree::new(h, leaves)?, m)
        })
        .collect::<Result<Vec<_>>>()?;
    // report in the order of the directly evaluated excess; stable, so enumeration order breaks ties
    instances.sort_by(|a, b| b.excess.total_cmp(&a.excess));
    Ok(ProductBoundReport { mode: SearchMode::Exhaustive, h_max, m, heights, instances })
}

/// Trial `i` draws its height uniformly from `1..=h_max` and keeps each leaf with probability 1/2.
pub fn random_tree(rng: &mut SplitMix64, h_max: usize) -> DyadicTree {
    let h = 1 + (rng.next_u64() % h_max as u64) as usize;
    let mut leaves: Vec<u64> = (0..1u64 << h).filter(|_| rng.next_u64() >> 63 == 1).collect();
    if leaves.is_empty() {
        leaves.push(rng.next_u64() >> (64 - h));
    }
    DyadicTree::new(h, leaves).expect("codes fit in h bits")
}

fn random(h_max: usize, m: usize, seed: u64, trials: u64, k: usize, budget: Budget) -> Result<ProductBoundReport> {
    if h_max == 0 || h_max > MAX_RANDOM_HEIGHT {
        return Err(Error::InvalidParam(format!("random search needs 1 <= h <= {MAX_RANDOM_HEIGHT}")));
    }
    budget.check(u128::from(trials) << h_max)?;
    let mut rng = SplitMix64::seed_from_u64(seed);
    let trees: Vec<DyadicTree> = (0..trials).map(|_| random_tree(&mut rng, h_max)).collect();
    let evaluated = trees.par_iter().map(|t| product_bound_instance(t, m)).collect::<Result<Vec<_>>>()?;
    let mut heights: Vec<HeightSummary> =
        (1..=h_max).map(|height| HeightSummary { height, trees: 0, violations: 0, max_excess: f64::NEG_INFINITY }).collect();
    for inst in &evaluated {
        let s = &mut heights[inst.tree.height() - 1];
        s.trees += 1;
        s.violations += u64::from(inst.is_violation());
        s.max_excess = s.max_excess.max(inst.excess);
    }
    heights.retain(|s| s.trees > 0);
    let mut instances: Vec<(usize, ProductBoundInstance)> =
        evaluated.into_iter().enumerate().filter(|(_, i)| i.is_violation()).collect();
    instances.sort_by(|a, b| b.1.excess.total_cmp(&a.1.excess).then(a.0.cmp(&b.0)));
    instances.truncate(k);
    Ok(ProductBoundReport {
        mode: SearchMode::Random { seed, trials },
        h_max,
        m,
        heights,
        instances: instances.into_iter().map(|i| i.1).collect(),
    })
}
