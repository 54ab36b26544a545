use serde::Serialize;

use super::config::{ConfigError, ExperimentConfig, Format, SearchKind};
use super::{effective_budget, CliError, Subcmd};
use crate::constructions::{an_construction, an_gap, doubling_stats, gap_points, preset, DoublingStats, PRESETS};
use crate::covering::{
    cylinder_recursion_check, dimension_report, local_sumset_profile, small_sumset_witness, sum_growth_experiment,
    DimensionReport, LocalSumsetProfile, SmallSumsetWitness, SumGrowth,
};
use crate::entropy::{
    convolution_identity_check, entropy_dimension_report, entropy_uniformity_mass, fiber_entropy_profile, lift_height,
    mu_n, small_convolution_witness, ConvolutionWitness, EntropyReport, FiberEntropyProfile, UniformityMass,
};
use crate::error::Budget;
use crate::ifs::{cylinder_points, delta_decay_report, DeltaReport, Ifs};
use crate::rational::Rational;
use crate::search::{product_bound_search, ProductBoundReport, SearchMode};
use crate::tree::{
    chain_rule_check, classify_levels, level_profile, lift_measure, lift_set, tree_measure_of_tree, ChainRule,
    ClassifyMode, LevelPartition, LevelStats, LiftConvention,
};

type Out = Result<String, CliError>;

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_block(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn require_ifs(cfg: &ExperimentConfig) -> Result<Ifs, CliError> {
    if let Some(ifs) = &cfg.ifs {
        return Ok(ifs.clone());
    }
    match &cfg.preset {
        Some(name) => Ok(preset(name, cfg.lambda.as_ref())?),
        None => Err(ConfigError::validation("source", "this command needs an IFS: use --preset or an `ifs` entry").into()),
    }
}

/// Runs one subcommand on a validated config and returns its full output.
pub fn execute(cmd: Subcmd, cfg: &ExperimentConfig) -> Out {
    let format = cfg.format.unwrap_or_default();
    let budget = effective_budget(cfg);
    match cmd {
        Subcmd::Dim => dim(cfg, format, budget),
        Subcmd::Delta => delta(cfg, format, budget),
        Subcmd::TreeProfile => tree_profile(cfg, format, budget),
        Subcmd::Sumset => sumset(cfg, format, budget),
        Subcmd::ConvolutionCheck => convolution_check(cfg, format, budget),
        Subcmd::FiberEntropy => fiber_entropy(cfg, format, budget),
        Subcmd::CounterexampleSearch => counterexample_search(cfg, format, budget),
        Subcmd::GapDemo => gap_demo(cfg, format, budget),
        Subcmd::Presets => presets(format),
    }
}

#[derive(Serialize)]
struct DimOutput {
    command: &'static str,
    n_max: usize,
    covering: DimensionReport,
    entropy: EntropyReport,
}

fn dim(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    let ifs = require_ifs(cfg)?;
    let n = cfg.n.unwrap_or(10);
    let covering = dimension_report(&ifs, n, budget)?;
    let entropy = entropy_dimension_report(&ifs, n, budget)?;
    Ok(match format {
        Format::Json => json_line(&DimOutput { command: "dim", n_max: n, covering, entropy }),
        Format::Csv => csv_block(
            &["n", "s_n", "alpha_hat", "entropy_bits", "entropy_normalized"],
            covering.s_values.iter().zip(&entropy.entries).map(|(c, e)| {
                vec![c.n.to_string(), c.s_n.to_string(), c.alpha_hat.to_string(), e.bits.to_string(), e.normalized.to_string()]
            }),
        ),
    })
}

#[derive(Serialize)]
struct DeltaOutput {
    command: &'static str,
    #[serde(flatten)]
    report: DeltaReport,
}

fn delta(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    let ifs = require_ifs(cfg)?;
    let report = delta_decay_report(&ifs, cfg.n.unwrap_or(10), budget)?;
    Ok(match format {
        Format::Json => json_line(&DeltaOutput { command: "delta", report }),
        Format::Csv => csv_block(
            &["n", "delta", "normalized_log", "overlap"],
            report
                .entries
                .iter()
                .map(|e| vec![e.n.to_string(), e.delta.to_string(), opt(&e.normalized_log), e.delta.is_zero().to_string()]),
        ),
    })
}

#[derive(Serialize)]
struct TreeProfileOutput {
    command: &'static str,
    height: usize,
    m: usize,
    eps: f64,
    mode: ClassifyMode,
    lift: LiftConvention,
    leaves: usize,
    levels: Vec<LevelStats>,
    partition: LevelPartition,
    w_fraction: f64,
    chain_rule: ChainRule,
}

fn tree_profile(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    let m = cfg.m.unwrap_or(1);
    let eps = cfg.epsilon.unwrap_or(0.1);
    let mode = cfg.classify.unwrap_or(ClassifyMode::Set);
    let lift = cfg.lift.unwrap_or_default();
    let (measure, height) = if let Some(points) = &cfg.points {
        let h = cfg.height.unwrap_or(12);
        let pts: Vec<Rational> = points.clone();
        let mu = crate::measure::DiscreteMeasure::<f64>::uniform(&pts)?;
        (mu, h)
    } else if let Some(mu) = &cfg.measure {
        (mu.clone(), cfg.height.unwrap_or(12))
    } else {
        let ifs = require_ifs(cfg)?;
        let n = cfg.n.unwrap_or(8);
        let h = cfg.height.unwrap_or_else(|| lift_height(&ifs, n).max(1));
        (mu_n(&ifs, n, budget)?.to_float(), h)
    };
    if height == 0 || m == 0 || m > height {
        return Err(ConfigError::validation("m", format!("need 1 <= m <= height = {height}")).into());
    }
    let (theta, tree) = match mode {
        ClassifyMode::Set => {
            let tree = lift_set(&measure.support(), height, lift)?;
            (tree_measure_of_tree(&tree), Some(tree))
        }
        ClassifyMode::Measure => (lift_measure(&measure, height, lift)?, None),
    };
    let profile = level_profile(&theta, tree.as_ref(), m, eps)?;
    let partition = classify_levels(&profile, eps, mode);
    let chain_rule = chain_rule_check(&theta, m)?;
    Ok(match format {
        Format::Json => json_line(&TreeProfileOutput {
            command: "tree-profile",
            height,
            m,
            eps,
            mode,
            lift,
            leaves: theta.support().leaf_count(),
            w_fraction: partition.w_fraction(height),
            levels: profile.levels,
            partition,
            chain_rule,
        }),
        Format::Csv => {
            let class = |l: usize| {
                if partition.u.contains(&l) {
                    "U"
                } else if partition.v.contains(&l) {
                    "V"
                } else {
                    "W"
                }
            };
            csv_block(
                &[
                    "level",
                    "frac_full_branching",
                    "frac_set_concentrated",
                    "frac_entropy_concentrated",
                    "frac_entropy_uniform",
                    "mean_normalized_entropy",
                    "class",
                ],
                profile.levels.iter().map(|s| {
                    vec![
                        s.level.to_string(),
                        s.frac_full_branching.to_string(),
                        s.frac_set_concentrated.to_string(),
                        s.frac_entropy_concentrated.to_string(),
                        s.frac_entropy_uniform.to_string(),
                        s.mean_normalized_entropy.to_string(),
                        class(s.level).to_string(),
                    ]
                }),
            )
        }
    })
}

#[derive(Serialize)]
struct SumsetOutput {
    command: &'static str,
    profile: LocalSumsetProfile,
    witness: Option<SmallSumsetWitness>,
    sum_growth: SumGrowth,
}

fn sumset(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    let ifs = require_ifs(cfg)?;
    let m = cfg.m.unwrap_or(3);
    let k = cfg.k.unwrap_or(1);
    let profile = local_sumset_profile(&ifs, m, k, budget)?;
    let witness = small_sumset_witness(&ifs, m, k, 2.0, profile.bound, budget)?;
    let j = cfg.y_exponent.unwrap_or(6);
    if j > 20 {
        return Err(ConfigError::validation("y_exponent", "at most 20").into());
    }
    let y: Vec<Rational> = (0..1i64 << j).map(|i| Rational::new(i, 1i64 << j)).collect();
    let rho = ifs.ratio().pow(cfg.n.unwrap_or(6) as u32);
    let sum_growth = sum_growth_experiment(&ifs, &y, &rho, budget)?;
    Ok(match format {
        Format::Json => json_line(&SumsetOutput { command: "sumset", profile, witness, sum_growth }),
        Format::Csv => {
            let mut s = csv_block(
                &["cell_start", "count", "sigma_estimate", "localized_cover"],
                profile.witnesses.iter().map(|w| {
                    vec![w.cell_start.to_string(), w.count.to_string(), w.sigma_estimate.to_string(), opt(&w.localized_cover)]
                }),
            );
            s.push('\n');
            s += &csv_block(
                &["n", "rho", "n_x", "n_y", "n_xy", "delta_hat"],
                [vec![
                    sum_growth.n.to_string(),
                    sum_growth.rho.to_string(),
                    sum_growth.n_x.to_string(),
                    sum_growth.n_y.to_string(),
                    sum_growth.n_xy.to_string(),
                    sum_growth.delta_hat.to_string(),
                ]],
            );
            s
        }
    })
}

#[derive(Serialize)]
struct ConvolutionRow {
    m: usize,
    n: usize,
    cylinder_recursion: bool,
    convolution_identity: bool,
}

#[derive(Serialize)]
struct ConvolutionOutput {
    command: &'static str,
    checks: Vec<ConvolutionRow>,
    all_hold: bool,
}

/// Checks every split `m + n = total` for `total <= --n` (default 6), or the single pair
/// `(--m, --k)` when `--m` is given.
fn convolution_check(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    let ifs = require_ifs(cfg)?;
    let pairs: Vec<(usize, usize)> = match cfg.m {
        Some(m) => vec![(m, cfg.k.unwrap_or(m))],
        None => {
            let total = cfg.n.unwrap_or(6);
            (0..=total).flat_map(|t| (0..=t).map(move |m| (m, t - m))).collect()
        }
    };
    let checks = pairs
        .into_iter()
        .map(|(m, n)| {
            Ok(ConvolutionRow {
                m,
                n,
                cylinder_recursion: cylinder_recursion_check(&ifs, m, n, budget)?,
                convolution_identity: convolution_identity_check(&ifs, m, n, budget)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let all_hold = checks.iter().all(|c| c.cylinder_recursion && c.convolution_identity);
    Ok(match format {
        Format::Json => json_line(&ConvolutionOutput { command: "convolution-check", checks, all_hold }),
        Format::Csv => csv_block(
            &["m", "n", "cylinder_recursion", "convolution_identity"],
            checks.iter().map(|c| {
                vec![c.m.to_string(), c.n.to_string(), c.cylinder_recursion.to_string(), c.convolution_identity.to_string()]
            }),
        ),
    })
}

#[derive(Serialize)]
struct FiberOutput {
    command: &'static str,
    profile: FiberEntropyProfile,
    witness: Option<ConvolutionWitness>,
    uniformity: UniformityMass,
}

fn fiber_entropy(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    let ifs = require_ifs(cfg)?;
    let m = cfg.m.unwrap_or(4);
    let k = cfg.k.unwrap_or(1);
    let c = cfg.c.unwrap_or(0.1);
    let delta = cfg.delta.unwrap_or(0.1);
    let tau = cfg.tau.unwrap_or(0.05);
    let profile = fiber_entropy_profile(&ifs, m, k, c, delta, budget)?;
    let witness = if m > 0 { small_convolution_witness(&ifs, m, k, tau, delta, budget)? } else { None };
    let n = cfg.n.unwrap_or(8);
    let um = m.clamp(1, lift_height(&ifs, n).max(1));
    let uniformity = entropy_uniformity_mass(&ifs, n, um, cfg.epsilon.unwrap_or(0.1), budget)?;
    Ok(match format {
        Format::Json => json_line(&FiberOutput { command: "fiber-entropy", profile, witness, uniformity }),
        Format::Csv => {
            let mut s = csv_block(
                &["cell_start", "mass", "fiber_bits", "convolution_normalized", "large_fiber", "small_growth"],
                profile.cells.iter().map(|c| {
                    vec![
                        c.cell_start.to_string(),
                        c.mass.to_string(),
                        c.fiber_bits.to_string(),
                        c.convolution_normalized.to_string(),
                        c.large_fiber.to_string(),
                        c.small_growth.to_string(),
                    ]
                }),
            );
            s.push('\n');
            s += &csv_block(
                &["alpha_hat", "large_fiber_mass", "small_growth_mass", "witness_nu_entropy", "uniformity_mass"],
                [vec![
                    profile.alpha_hat.to_string(),
                    profile.large_fiber_mass.to_string(),
                    profile.small_growth_mass.to_string(),
                    opt(&witness.as_ref().map(|w| w.nu_entropy)),
                    uniformity.mass.to_string(),
                ]],
            );
            s
        }
    })
}

#[derive(Serialize)]
struct SearchOutput {
    command: &'static str,
    verdict: &'static str,
    trees_examined: u64,
    #[serde(flatten)]
    report: ProductBoundReport,
}

fn counterexample_search(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    let h_max = cfg.n.unwrap_or(5);
    let m = cfg.m.unwrap_or(1);
    let mode = match cfg.search.unwrap_or_default() {
        SearchKind::Exhaustive => SearchMode::Exhaustive,
        SearchKind::Random => SearchMode::Random { seed: cfg.seed.unwrap_or(0), trials: cfg.trials.unwrap_or(1000) },
    };
    let report = product_bound_search(h_max, m, mode, cfg.max_instances.unwrap_or(10), budget)?;
    let verdict = if report.total_violations() > 0 { "violations found" } else { "no violation up to bounds" };
    let trees_examined = report.heights.iter().map(|h| h.trees).sum();
    Ok(match format {
        Format::Json => json_line(&SearchOutput { command: "counterexample-search", verdict, trees_examined, report }),
        Format::Csv => {
            let mut s = csv_block(
                &["height", "trees", "violations", "max_excess"],
                report.heights.iter().map(|h| {
                    vec![h.height.to_string(), h.trees.to_string(), h.violations.to_string(), h.max_excess.to_string()]
                }),
            );
            s.push('\n');
            s += &csv_block(
                &["rank", "height", "leaves", "log2_bound", "actual", "excess"],
                report.instances.iter().enumerate().map(|(i, inst)| {
                    let leaves: Vec<String> = inst.tree.leaves().iter().map(u64::to_string).collect();
                    vec![
                        (i + 1).to_string(),
                        inst.tree.height().to_string(),
                        leaves.join(" "),
                        inst.log2_bound.to_string(),
                        inst.actual.to_string(),
                        inst.excess.to_string(),
                    ]
                }),
            );
            s
        }
    })
}

#[derive(Serialize)]
struct GapOutput {
    command: &'static str,
    n: usize,
    size: usize,
    expected_size: u64,
    min_gap: Option<Rational>,
    proper_gap: bool,
    doubling: DoublingStats,
    /// `2^n |A_n|`.
    doubling_bound: u64,
}

#[derive(Serialize)]
struct PointDoublingOutput {
    command: &'static str,
    doubling: DoublingStats,
}

fn gap_demo(cfg: &ExperimentConfig, format: Format, budget: Budget) -> Out {
    if let Some(points) = &cfg.points {
        let doubling = doubling_stats(points, budget)?;
        return Ok(match format {
            Format::Json => json_line(&PointDoublingOutput { command: "gap-demo", doubling }),
            Format::Csv => csv_block(
                &["size", "sumset_size", "ratio", "log_ratio"],
                [vec![
                    doubling.size.to_string(),
                    doubling.sumset_size.to_string(),
                    doubling.ratio.to_string(),
                    opt(&doubling.log_ratio),
                ]],
            ),
        });
    }
    let n = cfg.n.unwrap_or(3);
    let a = an_construction(n, budget)?;
    let min_gap = a.windows(2).map(|w| &w[1] - &w[0]).min();
    let proper_gap = gap_points(&an_gap(n)?, budget)?.proper;
    let doubling = doubling_stats(&a, budget)?;
    let out = GapOutput {
        command: "gap-demo",
        n,
        size: a.len(),
        expected_size: 1u64 << (n * (n + 1) / 2),
        min_gap,
        proper_gap,
        doubling_bound: (1u64 << n) * a.len() as u64,
        doubling,
    };
    Ok(match format {
        Format::Json => json_line(&out),
        Format::Csv => csv_block(
            &["n", "size", "expected_size", "min_gap", "proper_gap", "sumset_size", "doubling_bound", "ratio"],
            [vec![
                n.to_string(),
                out.size.to_string(),
                out.expected_size.to_string(),
                opt(&out.min_gap),
                out.proper_gap.to_string(),
                out.doubling.sumset_size.to_string(),
                out.doubling_bound.to_string(),
                out.doubling.ratio.to_string(),
            ]],
        ),
    })
}

#[derive(Serialize)]
struct PresetOutput {
    command: &'static str,
    name: &'static str,
    ratio: &'static str,
    translations: &'static [&'static str],
    parameter: Option<&'static str>,
    parameter_default: Option<&'static str>,
    description: &'static str,
    sdim: f64,
    level1_overlap: bool,
}

fn presets(format: Format) -> Out {
    let rows = PRESETS
        .iter()
        .map(|p| {
            let ifs = preset(p.name, None)?;
            Ok(PresetOutput {
                command: "presets",
                name: p.name,
                ratio: p.ratio,
                translations: p.translations,
                parameter: p.parameter.map(|x| x.0),
                parameter_default: p.parameter.map(|x| x.1),
                description: p.description,
                sdim: crate::ifs::similarity_dimension(&ifs).sdim,
                level1_overlap: cylinder_points(&ifs, 1, Budget::default())?.has_overlap(),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(match format {
        Format::Json => rows.iter().map(json_line).collect(),
        Format::Csv => csv_block(
            &["name", "ratio", "translations", "parameter", "sdim", "description"],
            rows.iter().map(|r| {
                vec![
                    r.name.to_string(),
                    r.ratio.to_string(),
                    r.translations.join(" "),
                    r.parameter.map(|p| format!("{p}={}", r.parameter_default.unwrap())).unwrap_or_default(),
                    r.sdim.to_string(),
                    r.description.to_string(),
                ]
            }),
        ),
    })
}
