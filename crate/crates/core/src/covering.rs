//! Covering numbers on the line, the covering form of the dimension
//! sequence `s_n = log2 N_{r^n}(X_n)`, and the localized sumset experiments.
//!
//! Two covering counts are used throughout:
//!
//! * [`CoverMode::Optimal`]: the least number of closed intervals of length
//!   `eps` covering the points. A left-to-right greedy sweep is optimal in one
//!   dimension.
//! * [`CoverMode::Grid`]: the number of half-open cells `[k eps, (k+1) eps)`
//!   that contain a point.
//!
//! They satisfy `optimal <= grid <= 2 * optimal`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Budget, Error, Result};
use crate::ifs::{cylinder_levels, cylinder_points, similarity_dimension, CylinderSet, Ifs};
use crate::rational::Rational;

use CoverMode as Mode;

/// Additive slack in the approximate super-additivity `s_{m+n} >= s_m + s_n - log2 3`.
pub fn superadditivity_slack() -> f64 {
    3f64.log2()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverMode {
    Optimal,
    Grid,
}

/// The partition of the line into cells `[k eps, (k+1) eps)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub epsilon: Rational,
}

impl GridSpec {
    pub fn new(epsilon: Rational) -> Result<Self> {
        if !epsilon.is_positive() {
            return Err(Error::InvalidParam(format!("grid width {epsilon} must be positive")));
        }
        Ok(GridSpec { epsilon })
    }

    pub fn cell(&self, x: &Rational) -> BigInt {
        x.cell_index(&self.epsilon)
    }

    pub fn cell_start(&self, k: &BigInt) -> Rational {
        Rational::from_integer(k.clone()) * &self.epsilon
    }
}

/// Points `numerators[i] / denominator`, sorted ascending, over one shared denominator.
///
/// Lets covering and sumset computations run on integers only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledPoints {
    pub denominator: BigInt,
    pub numerators: Vec<BigInt>,
}

impl ScaledPoints {
    pub fn from_cylinder(set: &CylinderSet) -> Self {
        ScaledPoints { denominator: set.denominator().clone(), numerators: set.numerators().to_vec() }
    }

    pub fn from_rationals(points: &[Rational]) -> Self {
        let denominator = points.iter().fold(BigInt::one(), |acc, p| acc.lcm(p.denom()));
        let mut numerators: Vec<BigInt> =
            points.iter().map(|p| p.numer() * (&denominator / p.denom())).collect();
        numerators.sort();
        numerators.dedup();
        ScaledPoints { denominator, numerators }
    }

    pub fn len(&self) -> usize {
        self.numerators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.numerators.is_empty()
    }

    pub fn to_rationals(&self) -> Vec<Rational> {
        self.numerators.iter().map(|n| Rational::new(n.clone(), self.denominator.clone())).collect()
    }

    /// Distinct sums `{x + t*y}` for `x` in `self`, `y` in `other`.
    pub fn sumset_scaled(&self, other: &ScaledPoints, t: &Rational) -> ScaledPoints {
        // x = a/D1, t*y = (tn * b) / (td * D2)
        let d2 = t.denom() * &other.denominator;
        let denominator = self.denominator.lcm(&d2);
        let fa = &denominator / &self.denominator;
        let fb = (&denominator / &d2) * t.numer();
        let right: Vec<BigInt> = other.numerators.iter().map(|b| b * &fb).collect();
        let mut numerators: Vec<BigInt> = self
            .numerators
            .par_iter()
            .flat_map_iter(|a| {
                let base = a * &fa;
                right.iter().map(move |b| &base + b)
            })
            .collect();
        numerators.par_sort_unstable();
        numerators.dedup();
        ScaledPoints { denominator, numerators }
    }

    pub fn cover_count(&self, epsilon: &Rational, mode: CoverMode) -> Result<usize> {
        scaled_cover_count(&self.denominator, &self.numerators, epsilon, mode)
    }
}

/// Covering count for sorted points `numerators[i] / denominator`.
pub fn scaled_cover_count(
    denominator: &BigInt,
    numerators: &[BigInt],
    epsilon: &Rational,
    mode: CoverMode,
) -> Result<usize> {
    if numerators.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !epsilon.is_positive() {
        return Err(Error::InvalidParam(format!("cover scale {epsilon} must be positive")));
    }
    let (en, ed) = (epsilon.numer(), epsilon.denom());
    match mode {
        Mode::Optimal => {
            // Cover [s, s + eps] reaches point n iff n * ed <= s * ed + en * D.
            let reach = en * denominator;
            let mut count = 1usize;
            let mut limit = &numerators[0] * ed + &reach;
            for n in &numerators[1..] {
                let scaled = n * ed;
                if scaled > limit {
                    count += 1;
                    limit = scaled + &reach;
                }
            }
            Ok(count)
        }
        Mode::Grid => {
            // Cell of n/D is floor(n * ed / (D * en)).
            let div = denominator * en;
            let mut count = 0usize;
            let mut last: Option<BigInt> = None;
            for n in numerators {
                let cell = (n * ed).div_floor(&div);
                if last.as_ref() != Some(&cell) {
                    count += 1;
                    last = Some(cell);
                }
            }
            Ok(count)
        }
    }
}

/// `N_eps(points)` in the requested mode. Points need not be sorted or distinct.
pub fn cover_count(points: &[Rational], epsilon: &Rational, mode: CoverMode) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    ScaledPoints::from_rationals(points).cover_count(epsilon, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperadditivityViolation {
    pub m: usize,
    pub n: usize,
    /// `s_{m+n} - s_m - s_n`, below `-log2 3`.
    pub excess: f64,
}

/// Checks `s_{m+n} >= s_m + s_n - slack` for every `m, n >= 1` with `m + n` in range.
/// `s[i]` is the value at level `i`.
pub fn superadditivity_violations(s: &[f64], slack: f64) -> Vec<SuperadditivityViolation> {
    let n_max = s.len().saturating_sub(1);
    let mut out = Vec::new();
    for m in 1..=n_max {
        for n in m..=n_max.saturating_sub(m) {
            let excess = s[m + n] - s[m] - s[n];
            if excess < -slack - 1e-12 {
                out.push(SuperadditivityViolation { m, n, excess });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEntry {
    pub n: usize,
    /// `log2 N_{r^n}(X_n)` with grid covers.
    pub s_n: f64,
    /// `s_n / (n log2(1/r))`.
    pub alpha_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionReport {
    pub s_values: Vec<DimensionEntry>,
    pub bdim_estimate: f64,
    pub sdim: f64,
    pub beta: f64,
    pub superadditivity_violations: Vec<SuperadditivityViolation>,
}

pub fn dimension_report(ifs: &Ifs, n_max: usize, budget: Budget) -> Result<DimensionReport> {
    if n_max == 0 {
        return Err(Error::LevelZero);
    }
    let levels = cylinder_levels(ifs, n_max, budget)?;
    let log_inv_r = -ifs.ratio().log2();
    let s: Vec<f64> = levels
        .par_iter()
        .map(|set| {
            let eps = ifs.ratio().pow(set.level() as u32);
            let count = scaled_cover_count(set.denominator(), set.numerators(), &eps, Mode::Grid)?;
            Ok((count as f64).log2())
        })
        .collect::<Result<_>>()?;
    let s_values = (1..=n_max)
        .map(|n| DimensionEntry { n, s_n: s[n], alpha_hat: s[n] / (n as f64 * log_inv_r) })
        .collect::<Vec<_>>();
    let sd = similarity_dimension(ifs);
    Ok(DimensionReport {
        bdim_estimate: s_values.last().unwrap().alpha_hat,
        s_values,
        sdim: sd.sdim,
        beta: sd.beta,
        superadditivity_violations: superadditivity_violations(&s, superadditivity_slack()),
    })
}

/// Checks `X_{m+n} = X_m + r^m X_n` as exact point sets.
pub fn cylinder_recursion_check(ifs: &Ifs, m: usize, n: usize, budget: Budget) -> Result<bool> {
    budget.check(Budget::power(ifs.alphabet_size(), m + n))?;
    let xm = ScaledPoints::from_cylinder(&cylinder_points(ifs, m, budget)?);
    let xn = ScaledPoints::from_cylinder(&cylinder_points(ifs, n, budget)?);
    let sum = xm.sumset_scaled(&xn, &ifs.ratio().pow(m as u32));
    Ok(sum.to_rationals() == cylinder_points(ifs, m + n, budget)?.points())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumsetCoverCheck {
    /// `N_gamma(A + B)`.
    pub lhs: usize,
    /// `N_eps(A) * N_gamma(B) / 3`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates both sides of `N_gamma(A+B) >= N_eps(A) N_gamma(B) / 3` with optimal covers.
pub fn sumset_cover_check(
    a: &[Rational],
    b: &[Rational],
    epsilon: &Rational,
    gamma: &Rational,
) -> Result<SumsetCoverCheck> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !gamma.is_positive() || gamma >= epsilon {
        return Err(Error::PreconditionViolated(format!("need 0 < gamma < eps, got gamma={gamma}, eps={epsilon}")));
    }
    if let Some(bad) = b.iter().find(|y| y.is_negative() || *y >= epsilon) {
        return Err(Error::PreconditionViolated(format!("{bad} is not in [0, {epsilon})")));
    }
    let sa = ScaledPoints::from_rationals(a);
    let sb = ScaledPoints::from_rationals(b);
    let sum = sa.sumset_scaled(&sb, &Rational::one());
    let lhs = sum.cover_count(gamma, Mode::Optimal)?;
    let na = sa.cover_count(epsilon, Mode::Optimal)?;
    let nb = sb.cover_count(gamma, Mode::Optimal)?;
    Ok(SumsetCoverCheck { lhs, rhs: (na * nb) as f64 / 3.0, holds: 3 * lhs >= na * nb })
}

/// A grid cell `I` of width `r^m` and the part of `X_m` inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberWitness {
    pub cell_start: Rational,
    pub width: Rational,
    /// `|X_m ∩ I|`, counting distinct points.
    pub count: usize,
    /// `log2(count) / (m log2(1/r))`; zero when `m = 0`.
    pub sigma_estimate: f64,
    /// `N_{r^{m+n}}((X_m ∩ I) + r^m X_n)`, when a sumset scale is involved.
    pub localized_cover: Option<usize>,
}

/// Distinct points of `set` grouped by grid cell of width `width`, in cell order.
pub(crate) fn fibers(set: &CylinderSet, width: &Rational) -> Vec<(BigInt, Vec<BigInt>)> {
    let div = set.denominator() * width.numer();
    let mut groups: BTreeMap<BigInt, Vec<BigInt>> = BTreeMap::new();
    for n in set.numerators() {
        let cell = (n * width.denom()).div_floor(&div);
        groups.entry(cell).or_default().push(n.clone());
    }
    groups.into_iter().collect()
}

fn sigma(count: usize, m: usize, ifs: &Ifs) -> f64 {
    if m == 0 {
        0.0
    } else {
        (count as f64).log2() / (m as f64 * -ifs.ratio().log2())
    }
}

/// The width-`r^m` grid cell holding the most points of `X_m` (leftmost on ties).
///
/// If `X_m` has an exact overlap the witness is still computed and returned inside
/// [`Error::OverlapPresent`].
pub fn fiber_witness(ifs: &Ifs, m: usize, budget: Budget) -> Result<FiberWitness> {
    let set = cylinder_points(ifs, m, budget)?;
    let width = ifs.ratio().pow(m as u32);
    let groups = fibers(&set, &width);
    let (cell, pts) = groups
        .iter()
        .fold(None::<&(BigInt, Vec<BigInt>)>, |best, g| match best {
            Some(b) if b.1.len() >= g.1.len() => Some(b),
            _ => Some(g),
        })
        .unwrap();
    let witness = FiberWitness {
        cell_start: Rational::from_integer(cell.clone()) * &width,
        width,
        count: pts.len(),
        sigma_estimate: sigma(pts.len(), m, ifs),
        localized_cover: None,
    };
    if set.has_overlap() {
        return Err(Error::OverlapPresent { level: m, witness: Box::new(witness) });
    }
    Ok(witness)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSumsetProfile {
    pub m: usize,
    pub n: usize,
    /// Sorted by `localized_cover` ascending, then by cell.
    pub witnesses: Vec<FiberWitness>,
    /// `3 N_{r^{m+n}}(X_{m+n}) / N_{r^m}(X_m)`, optimal covers.
    pub bound: f64,
    pub minimum_within_bound: bool,
}

struct Fiber {
    cell: BigInt,
    points: ScaledPoints,
    localized: ScaledPoints,
}

fn local_fibers(ifs: &Ifs, m: usize, n: usize, budget: Budget) -> Result<(Vec<Fiber>, CylinderSet, CylinderSet)> {
    budget.check(Budget::power(ifs.alphabet_size(), m + n))?;
    let xm = cylinder_points(ifs, m, budget)?;
    let xn = cylinder_points(ifs, n, budget)?;
    let width = ifs.ratio().pow(m as u32);
    let xn_scaled = ScaledPoints::from_cylinder(&xn);
    let fibers: Vec<Fiber> = fibers(&xm, &width)
        .into_par_iter()
        .map(|(cell, nums)| {
            let points = ScaledPoints { denominator: xm.denominator().clone(), numerators: nums };
            let localized = points.sumset_scaled(&xn_scaled, &width);
            Fiber { cell, points, localized }
        })
        .collect();
    Ok((fibers, xm, xn))
}

/// For each width-`r^m` cell `J` meeting `X_m`, the optimal cover count of
/// `(X_m ∩ J) + r^m X_n` at scale `r^{m+n}`, with `n = k m`.
pub fn local_sumset_profile(ifs: &Ifs, m: usize, k: usize, budget: Budget) -> Result<LocalSumsetProfile> {
    let n = k * m;
    let (fibers, xm, _) = local_fibers(ifs, m, n, budget)?;
    let width = ifs.ratio().pow(m as u32);
    let fine = ifs.ratio().pow((m + n) as u32);
    let mut witnesses = fibers
        .par_iter()
        .map(|f| {
            Ok(FiberWitness {
                cell_start: Rational::from_integer(f.cell.clone()) * &width,
                width: width.clone(),
                count: f.points.len(),
                sigma_estimate: sigma(f.points.len(), m, ifs),
                localized_cover: Some(f.localized.cover_count(&fine, Mode::Optimal)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    witnesses.sort_by(|a, b| a.localized_cover.cmp(&b.localized_cover).then_with(|| a.cell_start.cmp(&b.cell_start)));

    let xmn = cylinder_points(ifs, m + n, budget)?;
    let n_mn = scaled_cover_count(xmn.denominator(), xmn.numerators(), &fine, Mode::Optimal)?;
    let n_m = scaled_cover_count(xm.denominator(), xm.numerators(), &width, Mode::Optimal)?;
    let bound = 3.0 * n_mn as f64 / n_m as f64;
    let min = witnesses[0].localized_cover.unwrap();
    Ok(LocalSumsetProfile { m, n, minimum_within_bound: (min * n_m) <= 3 * n_mn, witnesses, bound })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallSumsetWitness {
    pub cell_start: Rational,
    /// `r^{-m} (X_m ∩ I - cell_start)`, inside `[0, 1)`.
    pub y: Vec<Rational>,
    pub count: usize,
    /// `N_{r^n}(Y)`.
    pub cover_y: usize,
    /// `N_{r^n}(X_n + Y)`.
    pub cover_xy: usize,
    pub localized_cover: usize,
}

/// First cell (in the order of [`local_sumset_profile`]) with at least
/// `count_threshold` points and localized cover at most `cover_threshold`.
/// `None` when no cell qualifies.
pub fn small_sumset_witness(
    ifs: &Ifs,
    m: usize,
    k: usize,
    count_threshold: f64,
    cover_threshold: f64,
    budget: Budget,
) -> Result<Option<SmallSumsetWitness>> {
    let profile = local_sumset_profile(ifs, m, k, budget)?;
    let Some(w) = profile
        .witnesses
        .iter()
        .find(|w| w.count as f64 >= count_threshold && w.localized_cover.unwrap() as f64 <= cover_threshold)
    else {
        return Ok(None);
    };
    let n = profile.n;
    let xm = cylinder_points(ifs, m, budget)?;
    let xn = cylinder_points(ifs, n, budget)?;
    let inv_width = w.width.recip();
    let y: Vec<Rational> = xm
        .points()
        .into_iter()
        .filter(|p| p >= &w.cell_start && p < &(&w.cell_start + &w.width))
        .map(|p| (p - &w.cell_start) * &inv_width)
        .collect();
    let scale = ifs.ratio().pow(n as u32);
    let sy = ScaledPoints::from_rationals(&y);
    let sxy = ScaledPoints::from_cylinder(&xn).sumset_scaled(&sy, &Rational::one());
    Ok(Some(SmallSumsetWitness {
        cell_start: w.cell_start.clone(),
        count: y.len(),
        cover_y: sy.cover_count(&scale, Mode::Optimal)?,
        cover_xy: sxy.cover_count(&scale, Mode::Optimal)?,
        localized_cover: w.localized_cover.unwrap(),
        y,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumGrowth {
    pub n: usize,
    pub rho: Rational,
    pub n_x: usize,
    pub n_y: usize,
    pub n_xy: usize,
    /// `log N_XY / log N_X - 1`.
    pub delta_hat: f64,
}

/// Grid covering numbers of `X_n`, `Y`, `X_n + Y` at scale `rho = r^n`.
pub fn sum_growth_experiment(ifs: &Ifs, y: &[Rational], rho: &Rational, budget: Budget) -> Result<SumGrowth> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = y.iter().find(|v| v.is_negative() || *v > &Rational::one()) {
        return Err(Error::OutOfRange(bad.to_string()));
    }
    let n = level_for_scale(ifs.ratio(), rho)
        .ok_or_else(|| Error::PreconditionViolated(format!("{rho} is not a power of {}", ifs.ratio())))?;
    let xn = cylinder_points(ifs, n, budget)?;
    let sx = ScaledPoints::from_cylinder(&xn);
    let sy = ScaledPoints::from_rationals(y);
    let n_x = sx.cover_count(rho, Mode::Grid)?;
    if n_x < 2 {
        return Err(Error::PreconditionViolated("X_n meets a single cell; growth exponent undefined".into()));
    }
    let n_y = sy.cover_count(rho, Mode::Grid)?;
    let n_xy = sx.sumset_scaled(&sy, &Rational::one()).cover_count(rho, Mode::Grid)?;
    let delta_hat = (n_xy as f64).ln() / (n_x as f64).ln() - 1.0;
    Ok(SumGrowth { n, rho: rho.clone(), n_x, n_y, n_xy, delta_hat })
}

/// `n` with `r^n = rho`, if any.
pub fn level_for_scale(r: &Rational, rho: &Rational) -> Option<usize> {
    let mut cur = Rational::one();
    let mut n = 0;
    while &cur > rho {
        cur = &cur * r;
        n += 1;
    }
    (&cur == rho).then_some(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn qs(v: &[&str]) -> Vec<Rational> {
        v.iter().map(|s| q(s)).collect()
    }

    fn cantor() -> Ifs {
        Ifs::parse("1/3", &["0", "2/3"]).unwrap()
    }

    fn overlap() -> Ifs {
        Ifs::parse("1/2", &["0", "1/4", "1/2"]).unwrap()
    }

    /// Minimum interval cover by trying every subset of left endpoints drawn from the points.
    fn brute_force_optimal(points: &[Rational], eps: &Rational) -> usize {
        let mut pts = points.to_vec();
        pts.sort();
        pts.dedup();
        let k = pts.len();
        // Some optimal cover has every interval starting at a point.
        (1..=k)
            .find(|&size| {
                (0u32..(1 << k)).filter(|mask| mask.count_ones() as usize == size).any(|mask| {
                    pts.iter().all(|p| {
                        (0..k).any(|i| mask & (1 << i) != 0 && &pts[i] <= p && p <= &(&pts[i] + eps))
                    })
                })
            })
            .unwrap()
    }

    fn brute_force_grid(points: &[Rational], eps: &Rational) -> usize {
        let mut cells: Vec<BigInt> = points.iter().map(|p| p.cell_index(eps)).collect();
        cells.sort();
        cells.dedup();
        cells.len()
    }

    #[test]
    fn cover_examples() {
        let pts = qs(&["0", "1/2", "1"]);
        assert_eq!(cover_count(&pts, &q("3/5"), Mode::Optimal).unwrap(), 2);
        assert_eq!(cover_count(&pts, &q("3/5"), Mode::Grid).unwrap(), 2);
        for mode in [Mode::Optimal, Mode::Grid] {
            assert_eq!(cover_count(&qs(&["5/7"]), &q("1/100"), mode).unwrap(), 1);
        }
        assert!(matches!(cover_count(&[], &q("1"), Mode::Grid), Err(Error::EmptyInput)));
    }

    #[test]
    fn greedy_matches_exhaustive_on_small_sets() {
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as i64
        };
        for _ in 0..200 {
            let k = 1 + (next() % 10) as usize;
            let pts: Vec<Rational> = (0..k).map(|_| Rational::new(next() % 97, 97)).collect();
            let eps = Rational::new(1 + next() % 30, 101);
            assert_eq!(cover_count(&pts, &eps, Mode::Optimal).unwrap(), brute_force_optimal(&pts, &eps));
            assert_eq!(cover_count(&pts, &eps, Mode::Grid).unwrap(), brute_force_grid(&pts, &eps));
        }
    }

    #[test]
    fn dimension_report_examples() {
        let r = dimension_report(&cantor(), 12, Budget::default()).unwrap();
        assert!((0.61..=0.65).contains(&r.bdim_estimate));
        for e in &r.s_values {
            assert_eq!(e.s_n, e.n as f64);
        }
        assert!(r.superadditivity_violations.is_empty());

        let dy = Ifs::parse("1/2", &["0", "1/2"]).unwrap();
        assert_eq!(dimension_report(&dy, 10, Budget::default()).unwrap().bdim_estimate, 1.0);

        let dup = Ifs::parse("1/2", &["0", "0"]).unwrap();
        let r = dimension_report(&dup, 6, Budget::default()).unwrap();
        assert!(r.s_values.iter().all(|e| e.s_n == 0.0));
        assert_eq!(r.bdim_estimate, 0.0);
    }

    #[test]
    fn sumset_cover_check_examples() {
        let c = sumset_cover_check(&qs(&["0", "1"]), &qs(&["0"]), &q("1/2"), &q("1/4")).unwrap();
        assert!(c.holds);
        assert_eq!(c.lhs, 2);

        let ifs = cantor();
        for (m, n) in [(1, 1), (2, 3), (3, 2)] {
            let xm = cylinder_points(&ifs, m, Budget::default()).unwrap().points();
            let eps = ifs.ratio().pow(m as u32);
            let b: Vec<Rational> =
                cylinder_points(&ifs, n, Budget::default()).unwrap().points().iter().map(|y| y * &eps).collect();
            let gamma = ifs.ratio().pow((m + n) as u32);
            assert!(sumset_cover_check(&xm, &b, &eps, &gamma).unwrap().holds);
        }

        let err = sumset_cover_check(&qs(&["0"]), &qs(&["1/2"]), &q("1/2"), &q("1/4")).unwrap_err();
        assert!(matches!(err, Error::PreconditionViolated(_)));
    }

    #[test]
    fn fiber_witness_examples() {
        let w = fiber_witness(&cantor(), 6, Budget::default()).unwrap();
        assert_eq!(w.count, 1);

        let crowded = Ifs::parse("1/2", &["0", "1/3", "1/2"]).unwrap();
        // This system has exact overlaps too, so the witness arrives inside the advisory error.
        let w = match fiber_witness(&crowded, 6, Budget::default()) {
            Ok(w) => w,
            Err(Error::OverlapPresent { witness, .. }) => *witness,
            Err(e) => panic!("{e}"),
        };
        // Oracle: count distinct X_6 points per dyadic cell directly.
        let pts = cylinder_points(&crowded, 6, Budget::default()).unwrap().points();
        let width = q("1/64");
        let mut best = 0;
        for cell in 0..64 {
            let lo = Rational::from_integer(cell) * &width;
            let hi = &lo + &width;
            best = best.max(pts.iter().filter(|p| **p >= lo && **p < hi).count());
        }
        assert!(w.count > 1);
        assert_eq!(w.count, best);

        let dup = Ifs::parse("1/2", &["0", "0"]).unwrap();
        assert!(matches!(fiber_witness(&dup, 1, Budget::default()), Err(Error::OverlapPresent { level: 1, .. })));
    }

    #[test]
    fn local_sumset_examples() {
        let p = local_sumset_profile(&cantor(), 2, 2, Budget::default()).unwrap();
        assert_eq!(p.witnesses.len(), 4);
        assert!(p.witnesses.iter().all(|w| w.count == 1 && w.localized_cover == Some(16)));
        assert!(p.minimum_within_bound);

        let ifs = overlap();
        let p = local_sumset_profile(&ifs, 2, 1, Budget::default()).unwrap();
        // Oracle: rebuild each localized sumset from rationals.
        let xm = cylinder_points(&ifs, 2, Budget::default()).unwrap().points();
        let xn = cylinder_points(&ifs, 2, Budget::default()).unwrap().points();
        let width = q("1/4");
        let fine = q("1/16");
        let mut expected = Vec::new();
        for cell in 0..4 {
            let lo = Rational::from_integer(cell) * &width;
            let hi = &lo + &width;
            let fiber: Vec<&Rational> = xm.iter().filter(|x| **x >= lo && **x < hi).collect();
            if fiber.is_empty() {
                continue;
            }
            let sums: Vec<Rational> =
                fiber.iter().flat_map(|x| xn.iter().map(|y| *x + &(y * &width))).collect();
            expected.push(brute_force_optimal_sorted(&sums, &fine));
        }
        expected.sort();
        let got: Vec<usize> = p.witnesses.iter().map(|w| w.localized_cover.unwrap()).collect();
        assert_eq!(got, expected);
        assert!(p.minimum_within_bound);

        let p = local_sumset_profile(&ifs, 0, 3, Budget::default()).unwrap();
        assert_eq!(p.witnesses.len(), 1);
        assert_eq!(p.witnesses[0].localized_cover, Some(1));
    }

    fn brute_force_optimal_sorted(points: &[Rational], eps: &Rational) -> usize {
        let mut pts = points.to_vec();
        pts.sort();
        pts.dedup();
        let mut count = 0;
        let mut i = 0;
        while i < pts.len() {
            count += 1;
            let reach = &pts[i] + eps;
            while i < pts.len() && pts[i] <= reach {
                i += 1;
            }
        }
        count
    }

    #[test]
    fn small_sumset_examples() {
        let b = Budget::default();
        assert!(small_sumset_witness(&cantor(), 3, 1, 2.0, f64::INFINITY, b).unwrap().is_none());

        let w = small_sumset_witness(&overlap(), 4, 1, 2.0, f64::INFINITY, b).unwrap().unwrap();
        assert!(w.count >= 2);
        assert!(w.y.iter().all(|y| !y.is_negative() && y < &Rational::one()));
        assert_eq!(w.cover_xy, w.localized_cover);

        for ifs in [cantor(), overlap()] {
            assert!(small_sumset_witness(&ifs, 3, 1, 1.0, f64::INFINITY, b).unwrap().is_some());
        }
    }

    #[test]
    fn sum_growth_examples() {
        let b = Budget::default();
        let ifs = cantor();
        let rho = q("1/729");
        let g = sum_growth_experiment(&ifs, &qs(&["0"]), &rho, b).unwrap();
        assert_eq!(g.n_xy, g.n_x);
        assert_eq!(g.delta_hat, 0.0);

        let grid: Vec<Rational> = (0..64).map(|k| Rational::new(k, 64)).collect();
        let g = sum_growth_experiment(&ifs, &grid, &q("1/6561"), b).unwrap();
        assert!(g.delta_hat > 0.0);

        let x6 = cylinder_points(&ifs, 6, b).unwrap().points();
        let g = sum_growth_experiment(&ifs, &x6, &rho, b).unwrap();
        assert!(g.delta_hat > 0.0);

        assert!(matches!(sum_growth_experiment(&ifs, &x6, &q("1/10"), b), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn level_for_scale_finds_exact_powers() {
        assert_eq!(level_for_scale(&q("1/3"), &q("1/27")), Some(3));
        assert_eq!(level_for_scale(&q("1/3"), &q("1")), Some(0));
        assert_eq!(level_for_scale(&q("1/3"), &q("1/10")), None);
    }
}
