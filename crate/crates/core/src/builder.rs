//! Classical tree growth: split selection over all attributes, recursive
//! divide-and-conquer, and the instrumentation used by the scaling checks.

use serde::{Deserialize, Serialize};

use crate::criteria::{ClassHistogram, CounterBackend, OpTally, TIE_TOLERANCE};
use crate::dataset::{AttributeSchema, Dataset, SubsetView};
use crate::error::{Error, Result};
use crate::splitscan::{ScoredSplit, Scanner, SplitTest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Dense per-class arrays, allocated and erased for every attribute scan.
    Baseline,
    /// Sparse ordered-map counters.
    TreeMap,
    /// Tree-Map counters plus the simulated quantum attribute search.
    Quantum,
}

impl Backend {
    pub fn counters(self) -> CounterBackend {
        match self {
            Backend::Baseline => CounterBackend::Dense,
            Backend::TreeMap | Backend::Quantum => CounterBackend::TreeMap,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Baseline => "baseline",
            Backend::TreeMap => "treemap",
            Backend::Quantum => "quantum",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Backend::Baseline),
            "treemap" => Ok(Backend::TreeMap),
            "quantum" => Ok(Backend::Quantum),
            other => Err(Error::Config(format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    /// Maximum depth `h`; depth 0 is a single leaf.
    pub max_height: usize,
    /// Views smaller than this become leaves.
    pub min_split: usize,
    pub backend: Backend,
    /// Overrides the number of maximum-search repetitions per node.
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    /// Compare every quantum choice against the classical one.
    pub verify: bool,
    pub report: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            max_height: 8,
            min_split: 2,
            backend: Backend::TreeMap,
            repeats: None,
            seed: None,
            verify: false,
            report: false,
        }
    }
}

impl BuildConfig {
    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_max_height(mut self, h: usize) -> Self {
        self.max_height = h;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_split < 2 {
            return Err(Error::Config("min_split must be at least 2".into()));
        }
        if self.backend == Backend::Quantum && self.seed.is_none() {
            return Err(Error::Config("the quantum backend requires a seed".into()));
        }
        if self.repeats == Some(0) {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Internal {
        test: SplitTest,
        children: Vec<TreeNode>,
        support: ClassHistogram,
    },
    Leaf {
        class: usize,
        support: ClassHistogram,
    },
}

impl TreeNode {
    pub fn support(&self) -> &ClassHistogram {
        match self {
            TreeNode::Internal { support, .. } | TreeNode::Leaf { support, .. } => support,
        }
    }

    /// Length of the longest root-to-leaf path in edges.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => 1 + children.iter().map(TreeNode::depth).max().unwrap_or(0),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { children, .. } => 1 + children.iter().map(TreeNode::internal_count).sum::<usize>(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { children, .. } => children.iter().map(TreeNode::leaf_count).sum(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub nodes: u64,
    pub split_searches: u64,
    pub evaluations: u64,
    pub counter_ops: OpTally,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    /// `k`, the number of internal nodes.
    pub internal_nodes: usize,
    pub split_searches: u64,
    /// Calls of the attribute scoring function made by the split search.
    pub evaluations: u64,
    pub counter_ops: OpTally,
    pub levels: Vec<LevelStats>,
}

impl BuildStats {
    pub(crate) fn level(&mut self, level: usize) -> &mut LevelStats {
        if self.levels.len() <= level {
            self.levels.resize_with(level + 1, LevelStats::default);
        }
        &mut self.levels[level]
    }

    pub(crate) fn record_search(&mut self, level: usize, evaluations: u64, ops: OpTally) {
        self.split_searches += 1;
        self.evaluations += evaluations;
        self.counter_ops.absorb(ops);
        let l = self.level(level);
        l.split_searches += 1;
        l.evaluations += evaluations;
        l.counter_ops.absorb(ops);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub schema: AttributeSchema,
    pub max_height: usize,
    pub stats: BuildStats,
}

impl DecisionTree {
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        classify(self, x)
    }

    pub fn internal_nodes(&self) -> usize {
        self.root.internal_count()
    }
}

/// Walks the tests from the root; returns the reached leaf's class.
pub fn classify(tree: &DecisionTree, x: &[f64]) -> Result<usize> {
    if x.len() != tree.schema.len() {
        return Err(Error::InvalidDataset(format!(
            "sample has {} values, schema has {} attributes",
            x.len(),
            tree.schema.len()
        )));
    }
    let mut node = &tree.root;
    loop {
        match node {
            TreeNode::Leaf { class, .. } => return Ok(*class),
            TreeNode::Internal { test, children, .. } => {
                let value = x[test.attr()];
                let branch = test.branch(value).ok_or(Error::Domain {
                    attr: test.attr(),
                    value: value as i64,
                    domain: test.branch_count() as u32,
                })?;
                node = &children[branch];
            }
        }
    }
}

/// Strategy used by [`form_tree`] to pick the test at a node.
pub trait SplitChooser {
    fn choose(&mut self, view: &SubsetView<'_>, level: usize, stats: &mut BuildStats) -> Option<ScoredSplit>;
}

/// Scores every attribute and keeps the best; lower attribute index wins ties.
#[derive(Debug, Clone)]
pub struct ClassicalChooser {
    scanner: Scanner,
}

impl ClassicalChooser {
    pub fn new(backend: CounterBackend) -> Self {
        ClassicalChooser {
            scanner: Scanner::new(backend),
        }
    }
}

impl SplitChooser for ClassicalChooser {
    fn choose(&mut self, view: &SubsetView<'_>, level: usize, stats: &mut BuildStats) -> Option<ScoredSplit> {
        let d = view.data().dimension();
        let best = choose_split_with(view, &mut self.scanner);
        stats.record_search(level, d as u64, self.scanner.take_tally());
        best
    }
}

pub fn choose_split_with(view: &SubsetView<'_>, scanner: &mut Scanner) -> Option<ScoredSplit> {
    let mut best: Option<ScoredSplit> = None;
    for attr in 0..view.data().dimension() {
        if let Some(candidate) = scanner.attribute(view, attr) {
            if best.is_none_or(|b| candidate.score.exceeds(&b.score, TIE_TOLERANCE)) {
                best = Some(candidate);
            }
        }
    }
    best
}

pub fn choose_split(view: &SubsetView<'_>) -> Option<ScoredSplit> {
    choose_split_with(view, &mut Scanner::new(CounterBackend::TreeMap))
}

/// Grows the subtree for `view`, depth-first with children in branch order.
pub fn form_tree<C: SplitChooser>(
    view: &SubsetView<'_>,
    level: usize,
    config: &BuildConfig,
    chooser: &mut C,
    stats: &mut BuildStats,
) -> TreeNode {
    let support = view.class_histogram();
    stats.level(level).nodes += 1;
    let leaf = |support: ClassHistogram| TreeNode::Leaf {
        class: support.majority(),
        support,
    };
    if view.is_pure() || level >= config.max_height || view.len() < config.min_split {
        return leaf(support);
    }
    let Some(split) = chooser.choose(view, level, stats) else {
        return leaf(support);
    };
    stats.internal_nodes += 1;
    let majority = support.majority();
    let children = view
        .partition(&split.test)
        .iter()
        .map(|part| {
            if part.is_empty() {
                stats.level(level + 1).nodes += 1;
                TreeNode::Leaf {
                    class: majority,
                    support: ClassHistogram::new(support.classes()),
                }
            } else {
                form_tree(part, level + 1, config, chooser, stats)
            }
        })
        .collect();
    TreeNode::Internal {
        test: split.test,
        children,
        support,
    }
}

pub(crate) fn grow<C: SplitChooser>(data: &Dataset, config: &BuildConfig, chooser: &mut C) -> DecisionTree {
    let mut stats = BuildStats::default();
    let root = form_tree(&data.full_view(), 0, config, chooser, &mut stats);
    DecisionTree {
        root,
        schema: data.schema().clone(),
        max_height: config.max_height,
        stats,
    }
}

/// Grows a tree with the classical split search. The quantum backend is
/// served by [`crate::qbuilder::q_train`].
pub fn train(data: &Dataset, config: &BuildConfig) -> Result<DecisionTree> {
    config.validate()?;
    if config.backend == Backend::Quantum {
        return Err(Error::Config("the quantum backend is trained through q_train".into()));
    }
    let mut chooser = ClassicalChooser::new(config.backend.counters());
    Ok(grow(data, config, &mut chooser))
}
