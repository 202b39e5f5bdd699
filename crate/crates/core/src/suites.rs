//! Randomized verification suites with fixed pass thresholds.
//!
//! Each suite is seeded, returns the measured quantities as printable lines,
//! and decides pass or fail itself so the command line and the test harness
//! apply the same bounds.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::log_log_slope;
use crate::builder::{choose_split_with, grow, train, Backend, BuildConfig, BuildStats, SplitChooser};
use crate::criteria::{gain, gain_ratio, potential_information, ClassHistogram, CounterBackend};
use crate::dataset::{Attribute, AttributeKind, AttributeSchema, Column, Dataset, SubsetView};
use crate::model::to_json;
use crate::oracle::{argmax_set, brute_force_best_split, class_entropy};
use crate::qbuilder::{q_choose_split, q_train};
use crate::qsearch::{default_repeats, durr_hoyer_max, query_budget, ScoringOracle};
use crate::splitscan::{DiscreteScanState, RealScanState, ScoredSplit, Scanner};
use crate::synth::{generate, random_small, SynthConfig};

/// Agreement tolerance between incremental and from-scratch quantities.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub lines: Vec<String>,
}

impl SuiteResult {
    fn new(name: &str) -> Self {
        SuiteResult {
            name: name.to_string(),
            passed: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQUIVALENCE_TOLERANCE
}

fn ratio_close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => close(x, y),
        (None, None) => true,
        _ => false,
    }
}

/// Every split-scan candidate against the brute-force table.
pub fn oracle_equivalence(instances: usize, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scanner = Scanner::new(CounterBackend::TreeMap);
    let (mut candidates, mut structural, mut best_mismatch) = (0usize, 0usize, 0usize);
    let (mut dg, mut dp, mut dr) = (0.0f64, 0.0f64, 0.0f64);
    let mut ratio_presence = 0usize;
    for _ in 0..instances {
        let data = random_small(64, 6, 4, &mut rng);
        let view = data.full_view();
        let table = brute_force_best_split(&view);
        for attr in 0..data.dimension() {
            let expected: Vec<_> = table.rows_for(attr).collect();
            let got: Vec<ScoredSplit> = match data.schema().kind(attr) {
                AttributeKind::Real => scanner.real_candidates(&view, attr),
                AttributeKind::Discrete { .. } => scanner.discrete(&view, attr).into_iter().collect(),
            };
            if got.len() != expected.len() {
                structural += 1;
                continue;
            }
            for (g, e) in got.iter().zip(expected) {
                candidates += 1;
                if g.test != e.test {
                    structural += 1;
                }
                dg = dg.max((g.score.gain() - e.gain).abs());
                dp = dp.max((g.score.potential() - e.potential).abs());
                match (g.score.ratio(), e.ratio) {
                    (Some(a), Some(b)) => dr = dr.max((a - b).abs()),
                    (None, None) => {}
                    _ => ratio_presence += 1,
                }
            }
        }
        let chosen = choose_split_with(&view, &mut scanner);
        let agree = match (chosen, table.best_row()) {
            (None, None) => true,
            (Some(c), Some(b)) => c.test == b.test && ratio_close(c.score.ratio(), b.ratio),
            _ => false,
        };
        best_mismatch += usize::from(!agree);
    }
    result.note(format!("{instances} instances, {candidates} candidates"));
    result.check(structural == 0, format!("candidate sets identical ({structural} mismatches)"));
    result.check(
        ratio_presence == 0,
        format!("validity agrees ({ratio_presence} mismatches)"),
    );
    let worst = dg.max(dp).max(dr);
    result.check(
        worst <= EQUIVALENCE_TOLERANCE,
        format!("max |dG| {dg:.3e}, max |dP| {dp:.3e}, max |dratio| {dr:.3e} (bound 1e-9)"),
    );
    result.check(best_mismatch == 0, format!("choose_split agrees with the oracle argmax ({best_mismatch} mismatches)"));
    result
}

fn random_real_dataset<R: Rng + ?Sized>(rng: &mut R) -> Dataset {
    let n = rng.gen_range(2..=64);
    let m = rng.gen_range(2..=4);
    let levels = rng.gen_range(2..=16);
    let values = (0..n).map(|_| rng.gen_range(0..levels) as f64).collect();
    let labels = (0..n).map(|_| rng.gen_range(0..m)).collect();
    let schema = AttributeSchema::new(vec![Attribute::real("x")], (0..m).map(|c| format!("c{c}")).collect())
        .expect("valid schema");
    Dataset::new(schema, vec![Column::Real(values)], labels).expect("valid dataset")
}

fn random_subset<'a, R: Rng + ?Sized>(data: &'a Dataset, rng: &mut R) -> SubsetView<'a> {
    let size = rng.gen_range(1..=data.len());
    let mut picked = index::sample(rng, data.len(), size).into_vec();
    picked.sort_unstable();
    SubsetView::new(data, picked).expect("indices in range")
}

fn labels_entropy(data: &Dataset, rows: &[usize]) -> f64 {
    let mut counts = vec![0u64; data.schema().class_count()];
    for &i in rows {
        counts[data.label(i)] += 1;
    }
    class_entropy(&counts)
}

/// Prefix and suffix information arrays against from-scratch entropies.
pub fn prefix_arrays(instances: usize, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("prefix");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    let mut unsorted = 0usize;
    for _ in 0..instances {
        let data = random_real_dataset(&mut rng);
        let view = random_subset(&data, &mut rng);
        let state = RealScanState::build(&view, 0, CounterBackend::TreeMap);
        let order = state.order();
        let z = order.len();
        unsorted += usize::from(order.windows(2).any(|w| data.value(0, w[0]) > data.value(0, w[1])));
        for u in 0..=z {
            worst = worst.max((state.prefix_information(u) - labels_entropy(&data, &order[..u])).abs());
            checked += 1;
        }
        for u in 1..=z + 1 {
            worst = worst.max((state.suffix_information(u) - labels_entropy(&data, &order[u - 1..])).abs());
            checked += 1;
        }
        state.finish();
    }
    result.note(format!("{instances} sorted subsets, {checked} array entries"));
    result.check(unsorted == 0, format!("scan order ascending ({unsorted} violations)"));
    result.check(
        worst <= EQUIVALENCE_TOLERANCE,
        format!("max |pI - I| and |pbI - I| = {worst:.3e} (bound 1e-9)"),
    );
    result
}

/// One-pass discrete accumulators against batch recomputation.
pub fn discrete_incremental(instances: usize, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("discrete");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut disagreements = 0usize;
    for _ in 0..instances {
        let n = rng.gen_range(1..=64);
        let domain = rng.gen_range(2..=6u32);
        let m = rng.gen_range(2..=4usize);
        let values: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=domain)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
        let backend = if rng.gen_bool(0.5) {
            CounterBackend::TreeMap
        } else {
            CounterBackend::Dense
        };
        let mut state = DiscreteScanState::new(0, domain, m, n, backend);
        let mut parent = ClassHistogram::new(m);
        let mut branches = vec![ClassHistogram::new(m); domain as usize];
        for (&v, &y) in values.iter().zip(&labels) {
            state.push(y, v);
            parent.add(y);
            branches[v as usize - 1].add(y);
        }
        let sizes: Vec<u64> = branches.iter().map(ClassHistogram::total).collect();
        let occupied = sizes.iter().filter(|&&s| s > 0).count();
        let batch = (occupied >= 2).then(|| {
            let g = gain(&parent, &branches).expect("non-empty parent");
            let p = potential_information(&sizes).expect("non-empty sizes");
            gain_ratio(g, p)
        });
        match (state.score(), batch) {
            (Some(s), Some(b)) => {
                worst = worst
                    .max((s.score.gain() - b.gain()).abs())
                    .max((s.score.potential() - b.potential()).abs());
                match (s.score.ratio(), b.ratio()) {
                    (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
                    (None, None) => {}
                    _ => disagreements += 1,
                }
            }
            (None, None) => {}
            _ => disagreements += 1,
        }
        state.finish();
    }
    result.note(format!("{instances} instances"));
    result.check(disagreements == 0, format!("candidate existence agrees ({disagreements} mismatches)"));
    result.check(
        worst <= EQUIVALENCE_TOLERANCE,
        format!("max |delta| over G, P, ratio = {worst:.3e} (bound 1e-9)"),
    );
    result
}

/// Counter tallies of one build per declared class count.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassGridRow {
    pub classes: usize,
    pub baseline_ops: u64,
    pub treemap_ops: u64,
}

/// Builds the same data under several declared class counts; only the
/// alphabet size changes, the labels do not.
pub fn class_grid(samples: usize, d: usize, domain: u32, classes: &[usize], seed: u64) -> Vec<ClassGridRow> {
    let present = classes.iter().copied().min().unwrap_or(2).min(4);
    classes
        .iter()
        .map(|&m| {
            let synth = SynthConfig::real(samples, d, m)
                .with_attributes(vec![AttributeKind::Discrete { domain }; d])
                .with_present_classes(present);
            let data = generate(&synth, &mut ChaCha8Rng::seed_from_u64(seed)).expect("valid grid config");
            let ops = |backend| {
                let config = BuildConfig::default().with_backend(backend);
                train(&data, &config).expect("classical build").stats.counter_ops.total()
            };
            ClassGridRow {
                classes: m,
                baseline_ops: ops(Backend::Baseline),
                treemap_ops: ops(Backend::TreeMap),
            }
        })
        .collect()
}

/// Baseline and Tree Map builds serialize identically; Tree Map tallies do
/// not depend on the declared class count while baseline tallies do.
pub fn backend_identity(instances: usize, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("backend");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut differing = 0usize;
    for _ in 0..instances {
        let data = random_small(128, 8, 6, &mut rng);
        let a = train(&data, &BuildConfig::default().with_backend(Backend::Baseline)).expect("build");
        let b = train(&data, &BuildConfig::default().with_backend(Backend::TreeMap)).expect("build");
        differing += usize::from(to_json(&a) != to_json(&b));
    }
    result.check(
        differing == 0,
        format!("{instances} random datasets, baseline vs treemap models differ in {differing}"),
    );

    let grid = class_grid(512, 4, 8, &[4, 64, 256], seed);
    for row in &grid {
        result.note(format!(
            "M={:<4} baseline counter ops {:>10}  treemap counter ops {:>10}",
            row.classes, row.baseline_ops, row.treemap_ops
        ));
    }
    let flat = grid.iter().all(|r| r.treemap_ops == grid[0].treemap_ops);
    result.check(flat, "treemap tallies identical across M in {4, 64, 256}".to_string());
    let ratio = grid.last().unwrap().baseline_ops as f64 / grid[0].baseline_ops as f64;
    result.check(ratio >= 8.0, format!("baseline tally ratio M=256 / M=4 = {ratio:.2} (bound >= 8)"));
    result
}

fn injective_scores<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<u64> {
    let mut scores: Vec<u64> = (0..k as u64).collect();
    scores.shuffle(rng);
    scores
}

/// Success frequency of single Dürr-Høyer searches on injective score vectors.
pub fn single_search(ks: &[usize], trials: usize, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("single-search");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &k in ks {
        let mut hits = 0usize;
        for _ in 0..trials {
            let mut oracle = ScoringOracle::from_scores(injective_scores(k, &mut rng));
            let (_, stats) = durr_hoyer_max(&mut oracle, &mut rng);
            hits += usize::from(stats.succeeded);
        }
        let freq = hits as f64 / trials as f64;
        result.check(freq >= 0.48, format!("K={k:<4} success {freq:.4} over {trials} trials (bound >= 0.48)"));
    }
    result
}

/// Finds a dataset whose root has a unique best attribute, scanning seeds from `seed`.
pub fn strict_root_dataset(samples: usize, d: usize, seed: u64) -> (Dataset, usize, u64) {
    for s in seed.. {
        let synth = SynthConfig::real(samples, d, 2).planted(1, 0.1);
        let data = generate(&synth, &mut ChaCha8Rng::seed_from_u64(s)).expect("valid config");
        let ratios = attribute_ratios(&data.full_view());
        if let [best] = argmax_set(&ratios)[..] {
            if unique_margin(&ratios) > EQUIVALENCE_TOLERANCE {
                return (data, best, s);
            }
        }
    }
    unreachable!("seed space exhausted")
}

fn attribute_ratios(view: &SubsetView<'_>) -> Vec<Option<f64>> {
    let mut scanner = Scanner::new(CounterBackend::TreeMap);
    (0..view.data().dimension())
        .map(|a| scanner.attribute(view, a).and_then(|s| s.score.ratio()))
        .collect()
}

/// Gap between the best and second-best attribute ratio.
fn unique_margin(ratios: &[Option<f64>]) -> f64 {
    let mut valid: Vec<f64> = ratios.iter().flatten().copied().collect();
    valid.sort_by(|a, b| b.total_cmp(a));
    match valid.as_slice() {
        [] => 0.0,
        [_] => f64::INFINITY,
        [a, b, ..] => a - b,
    }
}

/// Per-node success of the repeated quantum attribute search on a view with
/// a unique best attribute. The bound is `1 - 2^-repeats - slack`.
pub fn node_search(d: usize, repeats: Option<usize>, trials: usize, slack: f64, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("node-search");
    let (data, best, data_seed) = strict_root_dataset(256, d, seed);
    let repeats_used = repeats.unwrap_or_else(|| default_repeats(d));
    let view = data.full_view();
    let mut hits = 0usize;
    let mut max_queries = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(t as u64));
        let search = q_choose_split(&view, repeats, &mut rng);
        hits += usize::from(search.split.map(|s| s.test.attr()) == Some(best));
        max_queries = max_queries.max(search.stats.oracle_queries);
    }
    let freq = hits as f64 / trials as f64;
    let bound = 1.0 - 0.5f64.powi(repeats_used as i32) - slack;
    result.note(format!("d={d}, repeats={repeats_used}, data seed {data_seed}, best attribute {best}"));
    result.check(
        freq >= bound,
        format!("per-node success {freq:.4} over {trials} trials (bound >= {bound:.4})"),
    );
    let cap = query_budget(d) * repeats_used.max(1) as f64;
    result.check(
        max_queries as f64 <= cap,
        format!("max queries per node {max_queries} (cap {cap:.1})"),
    );
    result
}

/// Mean oracle queries against K, with the per-run hard budget.
pub fn query_scaling(ks: &[usize], trials: usize, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("scaling");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    let mut over_budget = 0usize;
    for &k in ks {
        let budget = query_budget(k);
        let mut total = 0u64;
        for _ in 0..trials {
            let mut oracle = ScoringOracle::from_scores(injective_scores(k, &mut rng));
            let (_, stats) = durr_hoyer_max(&mut oracle, &mut rng);
            total += stats.oracle_queries;
            over_budget += usize::from(stats.oracle_queries as f64 > budget);
        }
        let mean = total as f64 / trials as f64;
        result.note(format!("K={k:<5} mean queries {mean:>9.2}  budget {budget:>8.2}"));
        points.push((k as f64, mean));
    }
    let slope = log_log_slope(&points);
    result.check(
        (0.35..=0.65).contains(&slope),
        format!("log-log slope {slope:.4} (bound [0.35, 0.65])"),
    );
    result.check(over_budget == 0, format!("runs over budget: {over_budget}"));
    result
}

/// Classical chooser that records the gap between the best and second-best
/// attribute at every search.
struct MarginProbe {
    scanner: Scanner,
    margins: Vec<f64>,
}

impl SplitChooser for MarginProbe {
    fn choose(&mut self, view: &SubsetView<'_>, _level: usize, _stats: &mut BuildStats) -> Option<ScoredSplit> {
        self.margins.push(unique_margin(&attribute_ratios(view)));
        choose_split_with(view, &mut self.scanner)
    }
}

/// Smallest best-vs-runner-up attribute gap over the classical build's searches.
pub fn classical_margins(data: &Dataset, config: &BuildConfig) -> (usize, f64) {
    let mut probe = MarginProbe {
        scanner: Scanner::new(CounterBackend::TreeMap),
        margins: Vec::new(),
    };
    let tree = grow(data, config, &mut probe);
    let min = probe.margins.iter().copied().fold(f64::INFINITY, f64::min);
    (tree.internal_nodes(), min)
}

/// Planted whole-tree configuration used by [`whole_tree`].
pub fn whole_tree_config() -> BuildConfig {
    BuildConfig {
        max_height: 3,
        min_split: 16,
        ..BuildConfig::default()
    }
}

/// First seed from `seed` whose planted data has a strict best attribute at
/// every classical search.
pub fn strict_tree_dataset(samples: usize, d: usize, config: &BuildConfig, seed: u64) -> (Dataset, usize, u64) {
    for s in seed.. {
        let synth = SynthConfig::real(samples, d, 4).planted(3, 0.05);
        let data = generate(&synth, &mut ChaCha8Rng::seed_from_u64(s)).expect("valid config");
        let (k, margin) = classical_margins(&data, config);
        if k > 0 && margin > EQUIVALENCE_TOLERANCE {
            return (data, k, s);
        }
    }
    unreachable!("seed space exhausted")
}

/// Frequency of quantum builds identical to the classical tree against `(1 - 1/d)^k - 0.05`.
pub fn whole_tree(d: usize, builds: usize, seed: u64) -> SuiteResult {
    let mut result = SuiteResult::new("tree");
    let config = whole_tree_config();
    let (data, k, data_seed) = strict_tree_dataset(512, d, &config, seed);
    let classical = to_json(&train(&data, &config).expect("classical build"));
    let mut same = 0usize;
    for b in 0..builds {
        let q = BuildConfig {
            backend: Backend::Quantum,
            seed: Some(seed.wrapping_mul(7919).wrapping_add(b as u64)),
            ..config.clone()
        };
        let report = q_train(&data, &q).expect("quantum build");
        same += usize::from(to_json(report.tree()) == classical);
    }
    let freq = same as f64 / builds as f64;
    let bound = (1.0 - 1.0 / d as f64).powi(k as i32) - 0.05;
    result.note(format!("d={d}, k={k} internal nodes, data seed {data_seed}"));
    result.check(
        freq >= bound,
        format!("quantum tree == classical tree in {freq:.4} of {builds} builds (bound >= {bound:.4})"),
    );
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_runs_pass() {
        assert!(oracle_equivalence(20, 1).passed);
        assert!(prefix_arrays(20, 1).passed);
        assert!(discrete_incremental(20, 1).passed);
        assert!(single_search(&[8], 300, 1).passed);
    }

    #[test]
    fn margins() {
        assert_eq!(unique_margin(&[Some(0.5), None, Some(0.25)]), 0.25);
        assert_eq!(unique_margin(&[None, Some(0.1)]), f64::INFINITY);
        assert_eq!(unique_margin(&[None]), 0.0);
    }
}
