//! Per-attribute best-split search.
//!
//! Real attributes are sorted once, then prefix and suffix class-entropy
//! arrays give every threshold's gain in O(1). Discrete attributes are
//! scored in one pass that keeps every accumulator equal to its
//! from-scratch value after each sample.

use serde::{Deserialize, Serialize};

use crate::criteria::{
    entropy_from_sum, gain_ratio, xlog2x, ClassCounter, CounterBackend, OpTally, SplitScore, TIE_TOLERANCE,
};
use crate::dataset::{AttributeKind, Column, SubsetView};

/// A test on a single attribute.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// Two outcomes: `x <= theta` (branch 0) and `x > theta` (branch 1).
    Threshold { attr: usize, theta: f64 },
    /// One outcome per domain value `1..=branches`.
    Multiway { attr: usize, branches: u32 },
}

impl SplitTest {
    pub fn attr(&self) -> usize {
        match *self {
            SplitTest::Threshold { attr, .. } | SplitTest::Multiway { attr, .. } => attr,
        }
    }

    pub fn branch_count(&self) -> usize {
        match *self {
            SplitTest::Threshold { .. } => 2,
            SplitTest::Multiway { branches, .. } => branches as usize,
        }
    }

    /// Branch taken by an attribute value, `None` for an out-of-domain discrete value.
    pub fn branch(&self, value: f64) -> Option<usize> {
        match *self {
            SplitTest::Threshold { theta, .. } => Some(usize::from(value > theta)),
            SplitTest::Multiway { branches, .. } => {
                (value.fract() == 0.0 && value >= 1.0 && value <= branches as f64).then(|| value as usize - 1)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredSplit {
    pub test: SplitTest,
    pub score: SplitScore,
}

/// Threshold strictly separating `lo < hi`: `lo <= θ < hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    let mid = if mid.is_finite() { mid } else { lo / 2.0 + hi / 2.0 };
    if mid >= lo && mid < hi {
        mid
    } else {
        lo
    }
}

/// Sorted order plus prefix and suffix information arrays for one real
/// attribute over a view.
#[derive(Debug)]
pub struct RealScanState {
    attr: usize,
    order: Vec<usize>,
    values: Vec<f64>,
    class_totals: ClassCounter,
    suffix_counts: ClassCounter,
    /// `prefix_info[u]` = I(first u samples), `u` in `0..=z`.
    prefix_info: Vec<f64>,
    /// `suffix_info[u]` = I(samples u..=z), 1-based `u` in `1..=z+1`.
    suffix_info: Vec<f64>,
}

impl RealScanState {
    pub fn build(view: &SubsetView<'_>, attr: usize, backend: CounterBackend) -> Self {
        let data = view.data();
        let Column::Real(column) = data.column(attr) else {
            panic!("attribute {attr} is not real-valued");
        };
        let classes = data.schema().class_count();
        let mut order = view.indices().to_vec();
        order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
        let values: Vec<f64> = order.iter().map(|&i| column[i]).collect();
        let z = order.len();

        let mut class_totals = ClassCounter::new(backend, classes);
        let mut prefix_info = vec![0.0; z + 1];
        let mut sum = 0.0;
        for (u, &row) in order.iter().enumerate() {
            let c = class_totals.increment(data.label(row));
            sum += xlog2x(c) - xlog2x(c - 1);
            prefix_info[u + 1] = entropy_from_sum(u as u64 + 1, sum);
        }

        let mut suffix_counts = ClassCounter::new(backend, classes);
        let mut suffix_info = vec![0.0; z + 2];
        let mut sum = 0.0;
        for u in (1..=z).rev() {
            let c = suffix_counts.increment(data.label(order[u - 1]));
            sum += xlog2x(c) - xlog2x(c - 1);
            suffix_info[u] = entropy_from_sum((z - u + 1) as u64, sum);
        }
        if z > 0 {
            suffix_info[0] = suffix_info[1];
        }

        RealScanState {
            attr,
            order,
            values,
            class_totals,
            suffix_counts,
            prefix_info,
            suffix_info,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Row indices in ascending attribute order (ties keep view order).
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `pC_j[z]`: class count over the whole view.
    pub fn class_total(&self, class: usize) -> u64 {
        self.class_totals.get(class)
    }

    /// `pI[u]` for `u` in `0..=z`.
    pub fn prefix_information(&self, u: usize) -> f64 {
        self.prefix_info[u]
    }

    /// `pbI[u]` for 1-based `u` in `1..=z+1`.
    pub fn suffix_information(&self, u: usize) -> f64 {
        self.suffix_info[u]
    }

    pub fn stored_keys(&self) -> usize {
        self.class_totals.stored_keys().max(self.suffix_counts.stored_keys())
    }

    /// Every threshold between adjacent distinct values, in ascending order.
    pub fn candidates(&self) -> Vec<ScoredSplit> {
        let z = self.len();
        let parent = self.prefix_info[z];
        let zf = z as f64;
        let mut out = Vec::new();
        for u in 1..z {
            let (lo, hi) = (self.values[u - 1], self.values[u]);
            if lo == hi {
                continue;
            }
            let left = u as f64 / zf;
            let right = (z - u) as f64 / zf;
            let gain = parent - left * self.prefix_info[u] - right * self.suffix_info[u + 1];
            let potential = -left * left.log2() - right * right.log2();
            out.push(ScoredSplit {
                test: SplitTest::Threshold {
                    attr: self.attr,
                    theta: midpoint(lo, hi),
                },
                score: gain_ratio(gain, potential),
            });
        }
        out
    }

    /// Clears both counters and reports their operation tallies.
    pub fn finish(mut self) -> OpTally {
        self.class_totals.clear();
        self.suffix_counts.clear();
        let mut tally = self.class_totals.tally();
        tally.absorb(self.suffix_counts.tally());
        tally
    }
}

/// Per-branch size and `Σ_j c·log2(c)` over the branch's class counts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BranchStat {
    pub size: u64,
    pub xlogx: f64,
}

/// Accumulators of the one-pass discrete evaluation.
///
/// After `u` samples, with `z` the full view size: `potential` is
/// `-Σ_w (N_w/z)·log2(N_w/z)`, `information` is `-Σ_j (C_j/z)·log2(C_j/z)`,
/// and `remainder` is `-Σ_w (N_w/z)·I_w`, so that the final gain is
/// `information + remainder`.
#[derive(Debug)]
pub struct DiscreteScanState {
    attr: usize,
    domain: u32,
    classes: usize,
    z: usize,
    processed: usize,
    nonempty_branches: usize,
    branches: ClassCounter<BranchStat>,
    class_counts: ClassCounter,
    class_branch: ClassCounter,
    potential: f64,
    information: f64,
    remainder: f64,
}

impl DiscreteScanState {
    pub fn new(attr: usize, domain: u32, classes: usize, z: usize, backend: CounterBackend) -> Self {
        let t = domain as usize;
        DiscreteScanState {
            attr,
            domain,
            classes,
            z,
            processed: 0,
            nonempty_branches: 0,
            branches: ClassCounter::new(backend, t),
            class_counts: ClassCounter::new(backend, classes),
            class_branch: ClassCounter::new(backend, classes * t),
            potential: 0.0,
            information: 0.0,
            remainder: 0.0,
        }
    }

    fn term(&self, n: u64) -> f64 {
        if n == 0 {
            0.0
        } else {
            let f = n as f64 / self.z as f64;
            f * f.log2()
        }
    }

    /// Folds in one sample with class `class` and attribute value `value` (1-based).
    pub fn push(&mut self, class: usize, value: u32) {
        let w = value as usize - 1;
        let zf = self.z as f64;

        let pair = self.class_branch.increment(w * self.classes + class);
        let class_total = self.class_counts.increment(class);
        let before = self.branches.get(w);
        let after = self.branches.update(w, |b| {
            b.size += 1;
            b.xlogx += xlog2x(pair) - xlog2x(pair - 1);
        });
        if before.size == 0 {
            self.nonempty_branches += 1;
        }

        self.potential += self.term(before.size) - self.term(after.size);
        self.information += self.term(class_total - 1) - self.term(class_total);
        self.remainder += (xlog2x(before.size) - before.xlogx) / zf - (xlog2x(after.size) - after.xlogx) / zf;
        self.processed += 1;
    }

    pub fn processed(&self) -> usize {
        self.processed
    }

    /// `N_w` for 1-based branch value `w`.
    pub fn branch_size(&self, value: u32) -> u64 {
        self.branches.get(value as usize - 1).size
    }

    /// `I_w`: information of the samples seen so far in branch `w`.
    pub fn branch_information(&self, value: u32) -> f64 {
        let b = self.branches.get(value as usize - 1);
        entropy_from_sum(b.size, b.xlogx)
    }

    pub fn class_count(&self, class: usize) -> u64 {
        self.class_counts.get(class)
    }

    pub fn class_branch_count(&self, class: usize, value: u32) -> u64 {
        self.class_branch.get((value as usize - 1) * self.classes + class)
    }

    pub fn potential(&self) -> f64 {
        self.potential
    }

    pub fn information(&self) -> f64 {
        self.information
    }

    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    pub fn stored_pairs(&self) -> usize {
        self.class_branch.stored_keys()
    }

    /// Score of the multiway split; `None` while fewer than two branches are occupied.
    pub fn score(&self) -> Option<ScoredSplit> {
        (self.nonempty_branches >= 2).then(|| ScoredSplit {
            test: SplitTest::Multiway {
                attr: self.attr,
                branches: self.domain,
            },
            score: gain_ratio(self.information + self.remainder, self.potential),
        })
    }

    pub fn finish(mut self) -> OpTally {
        self.branches.clear();
        self.class_counts.clear();
        self.class_branch.clear();
        let mut tally = self.branches.tally();
        tally.absorb(self.class_counts.tally());
        tally.absorb(self.class_branch.tally());
        tally
    }
}

/// Attribute scorer bound to a counter backend; accumulates counter tallies
/// across calls.
#[derive(Debug, Clone)]
pub struct Scanner {
    backend: CounterBackend,
    tally: OpTally,
}

impl Scanner {
    pub fn new(backend: CounterBackend) -> Self {
        Scanner {
            backend,
            tally: OpTally::default(),
        }
    }

    pub fn backend(&self) -> CounterBackend {
        self.backend
    }

    pub fn tally(&self) -> OpTally {
        self.tally
    }

    /// Takes the accumulated tally, resetting it to zero.
    pub fn take_tally(&mut self) -> OpTally {
        std::mem::take(&mut self.tally)
    }

    /// All threshold candidates of a real attribute.
    pub fn real_candidates(&mut self, view: &SubsetView<'_>, attr: usize) -> Vec<ScoredSplit> {
        let state = RealScanState::build(view, attr, self.backend);
        let candidates = state.candidates();
        self.tally.absorb(state.finish());
        candidates
    }

    /// Best threshold of a real attribute; the smallest θ wins ties.
    pub fn real(&mut self, view: &SubsetView<'_>, attr: usize) -> Option<ScoredSplit> {
        if view.len() < 2 {
            return None;
        }
        best_of(self.real_candidates(view, attr))
    }

    pub fn discrete(&mut self, view: &SubsetView<'_>, attr: usize) -> Option<ScoredSplit> {
        if view.len() < 2 {
            return None;
        }
        let data = view.data();
        let (Column::Discrete(column), AttributeKind::Discrete { domain }) =
            (data.column(attr), data.schema().kind(attr))
        else {
            panic!("attribute {attr} is not discrete");
        };
        let mut state = DiscreteScanState::new(attr, domain, data.schema().class_count(), view.len(), self.backend);
        for &i in view.indices() {
            state.push(data.label(i), column[i]);
        }
        let result = state.score();
        self.tally.absorb(state.finish());
        result
    }

    /// The scoring function handed to both the classical and the quantum attribute search.
    pub fn attribute(&mut self, view: &SubsetView<'_>, attr: usize) -> Option<ScoredSplit> {
        match view.data().schema().kind(attr) {
            AttributeKind::Real => self.real(view, attr),
            AttributeKind::Discrete { .. } => self.discrete(view, attr),
        }
    }
}

pub(crate) fn best_of(candidates: impl IntoIterator<Item = ScoredSplit>) -> Option<ScoredSplit> {
    let mut best: Option<ScoredSplit> = None;
    for c in candidates {
        if best.is_none_or(|b| c.score.exceeds(&b.score, TIE_TOLERANCE)) {
            best = Some(c);
        }
    }
    best
}

pub fn scan_real_attribute(view: &SubsetView<'_>, attr: usize) -> Option<ScoredSplit> {
    Scanner::new(CounterBackend::TreeMap).real(view, attr)
}

pub fn process_discrete_attribute(view: &SubsetView<'_>, attr: usize) -> Option<ScoredSplit> {
    Scanner::new(CounterBackend::TreeMap).discrete(view, attr)
}

pub fn process_attribute(view: &SubsetView<'_>, attr: usize) -> Option<ScoredSplit> {
    Scanner::new(CounterBackend::TreeMap).attribute(view, attr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::information;
    use crate::criteria::ClassHistogram;
    use crate::dataset::{Attribute, AttributeSchema, Dataset};
    use proptest::prelude::*;

    const EPS: f64 = 1e-7;

    fn real_data(values: &[f64], labels: &[usize]) -> Dataset {
        let schema = AttributeSchema::new(vec![Attribute::real("x")], vec!["A".into(), "B".into()]).unwrap();
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows(schema, &rows, labels.to_vec()).unwrap()
    }

    fn discrete_data(values: &[f64], labels: &[usize], t: u32) -> Dataset {
        let schema = AttributeSchema::new(vec![Attribute::discrete("k", t)], vec!["A".into(), "B".into()]).unwrap();
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows(schema, &rows, labels.to_vec()).unwrap()
    }

    fn threshold(s: &ScoredSplit) -> f64 {
        match s.test {
            SplitTest::Threshold { theta, .. } => theta,
            _ => panic!("not a threshold"),
        }
    }

    #[test]
    fn real_perfect_split() {
        let data = real_data(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        let best = scan_real_attribute(&data.full_view(), 0).unwrap();
        assert_eq!(threshold(&best), 2.5);
        assert!((best.score.ratio().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn real_constant_has_no_candidate() {
        let data = real_data(&[5.0, 5.0, 5.0], &[0, 1, 0]);
        assert!(scan_real_attribute(&data.full_view(), 0).is_none());
    }

    #[test]
    fn real_three_thresholds() {
        // expected values from exhaustive enumeration of the three thresholds
        let data = real_data(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 0, 1]);
        let mut scanner = Scanner::new(CounterBackend::TreeMap);
        let table = scanner.real_candidates(&data.full_view(), 0);
        let expected = [
            (1.5, 0.1225562, 0.8112781, 0.1510656),
            (2.5, 0.3112781, 1.0, 0.3112781),
            (3.5, 0.8112781, 0.8112781, 1.0),
        ];
        assert_eq!(table.len(), 3);
        for (row, (theta, g, p, r)) in table.iter().zip(expected) {
            assert_eq!(threshold(row), theta);
            assert!((row.score.gain() - g).abs() < EPS);
            assert!((row.score.potential() - p).abs() < EPS);
            assert!((row.score.ratio().unwrap() - r).abs() < EPS);
        }
        let best = scanner.real(&data.full_view(), 0).unwrap();
        assert_eq!(threshold(&best), 3.5);
    }

    #[test]
    fn equal_ratio_prefers_smallest_threshold() {
        // 1.5 and 3.5 are mirror images of each other
        let data = real_data(&[1.0, 2.0, 3.0, 4.0], &[1, 0, 0, 1]);
        let table = Scanner::new(CounterBackend::Dense).real_candidates(&data.full_view(), 0);
        let (a, b) = (table[0].score.ratio().unwrap(), table[2].score.ratio().unwrap());
        assert!((a - b).abs() < 1e-12);
        assert_eq!(threshold(&scan_real_attribute(&data.full_view(), 0).unwrap()), 1.5);
    }

    #[test]
    fn ties_in_values_are_never_separated() {
        let data = real_data(&[2.0, 1.0, 2.0, 1.0, 3.0], &[0, 1, 1, 0, 0]);
        let table = Scanner::new(CounterBackend::TreeMap).real_candidates(&data.full_view(), 0);
        let thetas: Vec<f64> = table.iter().map(threshold).collect();
        assert_eq!(thetas, vec![1.5, 2.5]);
    }

    #[test]
    fn adjacent_floats_get_a_separating_threshold() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo <= t && t < hi);
        let t = midpoint(-f64::MAX, f64::MAX);
        assert!((-f64::MAX..f64::MAX).contains(&t));
        let t = midpoint(f64::MAX / 2.0 * 1.5, f64::MAX);
        assert!(t < f64::MAX);
    }

    #[test]
    fn discrete_examples() {
        let data = discrete_data(&[1.0, 1.0, 2.0, 2.0], &[0, 0, 1, 1], 2);
        let s = process_discrete_attribute(&data.full_view(), 0).unwrap();
        assert!((s.score.ratio().unwrap() - 1.0).abs() < 1e-12);

        let data = discrete_data(&[1.0, 2.0, 1.0, 2.0], &[0, 0, 1, 1], 2);
        let s = process_discrete_attribute(&data.full_view(), 0).unwrap();
        assert!(s.score.ratio().unwrap().abs() < 1e-12);
        assert!(s.score.gain().abs() < 1e-12);

        let data = discrete_data(&[1.0, 1.0, 2.0], &[0, 1, 1], 2);
        let s = process_discrete_attribute(&data.full_view(), 0).unwrap();
        assert!((s.score.gain() - 0.2516292).abs() < EPS);
        assert!((s.score.potential() - 0.9182958).abs() < EPS);
        assert!((s.score.ratio().unwrap() - 0.2740175).abs() < EPS);
    }

    #[test]
    fn discrete_single_value_has_no_candidate() {
        let data = discrete_data(&[2.0, 2.0, 2.0], &[0, 1, 0], 3);
        assert!(process_discrete_attribute(&data.full_view(), 0).is_none());
    }

    #[test]
    fn dispatch_matches_kind() {
        let data = real_data(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1]);
        assert_eq!(process_attribute(&data.full_view(), 0), scan_real_attribute(&data.full_view(), 0));
        let data = discrete_data(&[1.0, 1.0, 2.0], &[0, 1, 1], 2);
        assert_eq!(
            process_attribute(&data.full_view(), 0),
            process_discrete_attribute(&data.full_view(), 0)
        );
    }

    fn labelled(m: usize) -> impl Strategy<Value = Vec<(u32, usize)>> {
        proptest::collection::vec((1u32..6, 0..m), 2..64)
    }

    fn data_from(samples: &[(u32, usize)], m: usize, t: u32, real: bool) -> Dataset {
        let attr = if real { Attribute::real("x") } else { Attribute::discrete("k", t) };
        let labels: Vec<String> = (0..m).map(|j| format!("c{j}")).collect();
        let schema = AttributeSchema::new(vec![attr], labels).unwrap();
        let rows: Vec<Vec<f64>> = samples.iter().map(|s| vec![s.0 as f64]).collect();
        Dataset::from_rows(schema, &rows, samples.iter().map(|s| s.1).collect()).unwrap()
    }

    fn info_of(data: &Dataset, rows: &[usize]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let mut h = ClassHistogram::new(data.schema().class_count());
        for &r in rows {
            h.add(data.label(r));
        }
        information(&h).unwrap()
    }

    proptest! {
        #[test]
        fn prefix_and_suffix_match_from_scratch(samples in labelled(5)) {
            let data = data_from(&samples, 5, 5, true);
            for backend in [CounterBackend::Dense, CounterBackend::TreeMap] {
                let state = RealScanState::build(&data.full_view(), 0, backend);
                let z = state.len();
                let order = state.order().to_vec();
                for u in 1..=z {
                    prop_assert!((state.prefix_information(u) - info_of(&data, &order[..u])).abs() < 1e-9);
                    prop_assert!((state.suffix_information(u) - info_of(&data, &order[u - 1..])).abs() < 1e-9);
                }
                prop_assert!((state.prefix_information(z) - state.suffix_information(1)).abs() < 1e-9);
                for j in 0..5 {
                    let count = samples.iter().filter(|s| s.1 == j).count() as u64;
                    prop_assert_eq!(state.class_total(j), count);
                }
                let distinct = samples.iter().map(|s| s.1).collect::<std::collections::BTreeSet<_>>().len();
                if backend == CounterBackend::TreeMap {
                    prop_assert!(state.stored_keys() <= distinct);
                }
            }
        }

        #[test]
        fn discrete_accumulators_track_definitions(samples in labelled(4)) {
            let m = 4;
            let t = 5u32;
            let z = samples.len();
            let zf = z as f64;
            let term = |n: u64| if n == 0 { 0.0 } else { let f = n as f64 / zf; f * f.log2() };
            let mut state = DiscreteScanState::new(0, t, m, z, CounterBackend::TreeMap);
            for (u, &(w, y)) in samples.iter().enumerate() {
                state.push(y, w);
                let seen = &samples[..=u];
                let size = |w: u32| seen.iter().filter(|s| s.0 == w).count() as u64;
                let mut potential = 0.0;
                let mut remainder = 0.0;
                for w in 1..=t {
                    prop_assert_eq!(state.branch_size(w), size(w));
                    potential -= term(size(w));
                    let mut h = ClassHistogram::new(m);
                    seen.iter().filter(|s| s.0 == w).for_each(|s| h.add(s.1));
                    let iw = if h.total() == 0 { 0.0 } else { information(&h).unwrap() };
                    prop_assert!((state.branch_information(w) - iw).abs() < 1e-9);
                    remainder -= size(w) as f64 / zf * iw;
                    for j in 0..m {
                        prop_assert_eq!(state.class_branch_count(j, w), h.count(j));
                    }
                }
                let mut info = 0.0;
                for j in 0..m {
                    let c = seen.iter().filter(|s| s.1 == j).count() as u64;
                    prop_assert_eq!(state.class_count(j), c);
                    info -= term(c);
                }
                prop_assert!((state.potential() - potential).abs() < 1e-9);
                prop_assert!((state.information() - info).abs() < 1e-9);
                prop_assert!((state.remainder() - remainder).abs() < 1e-9);
            }
            let pairs = samples.iter().collect::<std::collections::BTreeSet<_>>().len();
            prop_assert!(state.stored_pairs() <= pairs);
        }
    }
}
