//! Brute-force reference scoring.
//!
//! Every candidate test is scored by materialising its branch histograms and
//! applying the entropy definitions directly. Nothing here calls into the
//! criteria or split-scan code, so agreement between the two is evidence.

use crate::builder::TreeNode;
use crate::criteria::ClassHistogram;
use crate::dataset::{AttributeKind, Dataset, SubsetView};
use crate::splitscan::SplitTest;

const POTENTIAL_FLOOR: f64 = 1e-12;
const TIE: f64 = 1e-12;

/// Entropy in bits of a class-count vector.
pub fn class_entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// One candidate test with everything needed to audit its score.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub test: SplitTest,
    pub parent_information: f64,
    /// Dense class histogram of each branch, in branch order.
    pub branches: Vec<Vec<u64>>,
    pub gain: f64,
    pub potential: f64,
    pub ratio: Option<f64>,
}

impl OracleRow {
    fn new(test: SplitTest, parent: &[u64], branches: Vec<Vec<u64>>) -> Self {
        let z: u64 = parent.iter().sum();
        let z = z as f64;
        let parent_information = class_entropy(parent);
        let mut remainder = 0.0;
        let mut potential = 0.0;
        for b in &branches {
            let size: u64 = b.iter().sum();
            if size == 0 {
                continue;
            }
            let w = size as f64 / z;
            remainder += w * class_entropy(b);
            potential -= w * w.log2();
        }
        let gain = parent_information - remainder;
        OracleRow {
            test,
            parent_information,
            branches,
            gain,
            potential,
            ratio: (potential > POTENTIAL_FLOOR).then(|| gain / potential),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Candidates by attribute, thresholds ascending within an attribute.
    pub rows: Vec<OracleRow>,
    /// Index into `rows` of the winner under the builder's tie-break.
    pub best: Option<usize>,
}

impl OracleResult {
    pub fn best_row(&self) -> Option<&OracleRow> {
        self.best.map(|i| &self.rows[i])
    }

    pub fn rows_for(&self, attr: usize) -> impl Iterator<Item = &OracleRow> {
        self.rows.iter().filter(move |r| r.test.attr() == attr)
    }

    /// Best row of one attribute.
    pub fn best_for(&self, attr: usize) -> Option<&OracleRow> {
        pick(self.rows_for(attr)).map(|(_, r)| r)
    }
}

fn better(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x > y + TIE,
        (Some(_), None) => true,
        (None, _) => false,
    }
}

fn pick<'a>(rows: impl Iterator<Item = &'a OracleRow>) -> Option<(usize, &'a OracleRow)> {
    let mut best: Option<(usize, &OracleRow)> = None;
    for (i, row) in rows.enumerate() {
        if best.is_none_or(|(_, b)| better(row.ratio, b.ratio)) {
            best = Some((i, row));
        }
    }
    best
}

/// Threshold halfway between two adjacent distinct values, kept inside `[lo, hi)`.
fn halfway(lo: f64, hi: f64) -> f64 {
    let mut t = (lo + hi) / 2.0;
    if !t.is_finite() {
        t = lo / 2.0 + hi / 2.0;
    }
    if lo <= t && t < hi {
        t
    } else {
        lo
    }
}

/// Scores every legal test on `view` from the definitions.
pub fn brute_force_best_split(view: &SubsetView<'_>) -> OracleResult {
    let data = view.data();
    let m = data.schema().class_count();
    let mut parent = vec![0u64; m];
    for &i in view.indices() {
        parent[data.label(i)] += 1;
    }
    let mut rows = Vec::new();
    for attr in 0..data.dimension() {
        match data.schema().kind(attr) {
            AttributeKind::Real => {
                let mut values: Vec<f64> = view.indices().iter().map(|&i| data.value(attr, i)).collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                for pair in values.windows(2) {
                    let theta = halfway(pair[0], pair[1]);
                    let mut branches = vec![vec![0u64; m]; 2];
                    for &i in view.indices() {
                        let side = if data.value(attr, i) <= theta { 0 } else { 1 };
                        branches[side][data.label(i)] += 1;
                    }
                    rows.push(OracleRow::new(SplitTest::Threshold { attr, theta }, &parent, branches));
                }
            }
            AttributeKind::Discrete { domain } => {
                let mut branches = vec![vec![0u64; m]; domain as usize];
                for &i in view.indices() {
                    branches[data.value(attr, i) as usize - 1][data.label(i)] += 1;
                }
                let occupied = branches.iter().filter(|b| b.iter().any(|&c| c > 0)).count();
                if occupied >= 2 {
                    let test = SplitTest::Multiway { attr, branches: domain };
                    rows.push(OracleRow::new(test, &parent, branches));
                }
            }
        }
    }
    let best = pick(rows.iter()).map(|(i, _)| i);
    OracleResult { rows, best }
}

/// Indices whose ratio is within the tie tolerance of the largest valid ratio.
pub fn argmax_set(ratios: &[Option<f64>]) -> Vec<usize> {
    let Some(top) = ratios.iter().flatten().copied().reduce(f64::max) else {
        return Vec::new();
    };
    ratios
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_some_and(|r| r >= top - TIE))
        .map(|(i, _)| i)
        .collect()
}

fn leaf(counts: Vec<u64>) -> TreeNode {
    let mut class = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[class] {
            class = c;
        }
    }
    TreeNode::Leaf {
        class,
        support: ClassHistogram::from_counts(counts),
    }
}

fn reference_node(data: &Dataset, indices: Vec<usize>, level: usize, max_height: usize, min_split: usize) -> TreeNode {
    let m = data.schema().class_count();
    let mut counts = vec![0u64; m];
    for &i in &indices {
        counts[data.label(i)] += 1;
    }
    let distinct = counts.iter().filter(|&&c| c > 0).count();
    if distinct <= 1 || level >= max_height || indices.len() < min_split {
        return leaf(counts);
    }
    let view = SubsetView::new(data, indices.clone()).expect("indices come from the dataset");
    let result = brute_force_best_split(&view);
    let Some(best) = result.best_row() else {
        return leaf(counts);
    };
    let test = best.test;
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); best.branches.len()];
    for &i in &indices {
        let v = data.value(test.attr(), i);
        let b = match test {
            SplitTest::Threshold { theta, .. } => usize::from(v > theta),
            SplitTest::Multiway { .. } => v as usize - 1,
        };
        parts[b].push(i);
    }
    let majority = match leaf(counts.clone()) {
        TreeNode::Leaf { class, .. } => class,
        TreeNode::Internal { .. } => unreachable!(),
    };
    let children = parts
        .into_iter()
        .map(|part| {
            if part.is_empty() {
                TreeNode::Leaf {
                    class: majority,
                    support: ClassHistogram::new(m),
                }
            } else {
                reference_node(data, part, level + 1, max_height, min_split)
            }
        })
        .collect();
    TreeNode::Internal {
        test,
        children,
        support: ClassHistogram::from_counts(counts),
    }
}

/// Exhaustive tree growth with the oracle's best split at every node.
pub fn reference_tree(data: &Dataset, max_height: usize, min_split: usize) -> TreeNode {
    reference_node(data, (0..data.len()).collect(), 0, max_height, min_split)
}
