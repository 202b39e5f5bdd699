//! Tree growth with the attribute search replaced by repeated Dürr-Høyer
//! maximum finding over the per-attribute scores.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::builder::{choose_split_with, grow, Backend, BuildConfig, BuildStats, DecisionTree, SplitChooser};
use crate::criteria::{CounterBackend, OpTally, SplitScore, TIE_TOLERANCE};
use crate::dataset::{Dataset, SubsetView};
use crate::error::{Error, Result};
use crate::qsearch::{default_repeats, repeated_max, ScoringOracle, SearchStats};
use crate::splitscan::{ScoredSplit, Scanner};

/// Search key of one attribute: no candidate orders below the invalid
/// sentinel, which orders below every valid ratio.
type AttrScore = Option<SplitScore>;

/// Outcome of one quantum split search.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumSearch {
    pub split: Option<ScoredSplit>,
    pub stats: SearchStats,
    pub repeats: usize,
    /// Counter operations of the scoring calls the search made.
    pub counter_ops: OpTally,
}

/// Attribute search by [`repeated_max`]; `repeats` defaults to `max(1, ⌈log2 d⌉)`.
pub fn q_choose_split<R: Rng + ?Sized>(view: &SubsetView<'_>, repeats: Option<usize>, rng: &mut R) -> QuantumSearch {
    let d = view.data().dimension();
    let repeats = repeats.unwrap_or_else(|| default_repeats(d));
    let mut scanner = Scanner::new(CounterBackend::TreeMap);
    let mut splits = Vec::with_capacity(d);
    let mut tallies = Vec::with_capacity(d);
    for attr in 0..d {
        splits.push(scanner.attribute(view, attr));
        tallies.push(scanner.take_tally());
    }
    let census: Vec<AttrScore> = splits.iter().map(|s| s.map(|s| s.score)).collect();

    let spent = RefCell::new(OpTally::default());
    let (winner, stats) = {
        let mut oracle = ScoringOracle::new(census.clone(), |attr| {
            spent.borrow_mut().absorb(tallies[attr]);
            census[attr]
        });
        let (winner, stats) = repeated_max(&mut oracle, repeats, rng);
        let winner = match oracle.cached(winner) {
            Some(Some(score)) if score.is_valid() => Some(winner),
            _ => (0..d)
                .filter(|&a| matches!(oracle.cached(a), Some(Some(s)) if s.is_valid()))
                .max_by(|&a, &b| census[a].cmp(&census[b]).then(b.cmp(&a))),
        };
        (winner, stats)
    };
    QuantumSearch {
        split: winner.and_then(|a| splits[a]),
        stats,
        repeats,
        counter_ops: spent.into_inner(),
    }
}

/// One split search of a quantum build, in search order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSearch {
    pub node: usize,
    pub level: usize,
    pub size: usize,
    pub chosen_attr: Option<usize>,
    /// Classical choice on the same view; present only when verifying.
    pub best_attr: Option<usize>,
    pub oracle_queries: u64,
    pub repeats: usize,
    /// The chosen score attains the classical optimum (within the tie tolerance).
    pub correct: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QBuildReport {
    #[serde(skip)]
    pub tree: Option<DecisionTree>,
    pub seed: u64,
    pub internal_nodes: usize,
    pub per_node: Vec<NodeSearch>,
    pub total_oracle_queries: u64,
    /// Internal nodes whose test attains the classical optimum.
    pub nodes_correct: usize,
    pub verified: bool,
}

impl QBuildReport {
    /// Every search returned a classically optimal answer. `None` without verification.
    pub fn all_correct(&self) -> Option<bool> {
        self.verified
            .then(|| self.per_node.iter().all(|n| n.correct == Some(true)))
    }

    /// Every search picked the same attribute as the classical build would.
    pub fn matches_classical(&self) -> Option<bool> {
        self.verified
            .then(|| self.per_node.iter().all(|n| n.chosen_attr == n.best_attr))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialisation is infallible");
        out.push('\n');
        out
    }

    pub fn tree(&self) -> &DecisionTree {
        self.tree.as_ref().expect("report carries its tree")
    }
}

fn same_choice(chosen: &Option<ScoredSplit>, best: &Option<ScoredSplit>) -> bool {
    match (chosen, best) {
        (None, None) => true,
        (Some(c), Some(b)) => match (c.score.ratio(), b.score.ratio()) {
            (Some(x), Some(y)) => (x - y).abs() <= TIE_TOLERANCE,
            (None, None) => true,
            _ => false,
        },
        _ => false,
    }
}

struct QuantumChooser<'r, R: ?Sized> {
    rng: &'r mut R,
    repeats: Option<usize>,
    verify: bool,
    verifier: Scanner,
    searches: Vec<NodeSearch>,
}

impl<R: Rng + ?Sized> SplitChooser for QuantumChooser<'_, R> {
    fn choose(&mut self, view: &SubsetView<'_>, level: usize, stats: &mut BuildStats) -> Option<ScoredSplit> {
        let search = q_choose_split(view, self.repeats, self.rng);
        stats.record_search(level, search.stats.evaluations, search.counter_ops);
        let (best_attr, correct) = if self.verify {
            let best = choose_split_with(view, &mut self.verifier);
            self.verifier.take_tally();
            (best.map(|b| b.test.attr()), Some(same_choice(&search.split, &best)))
        } else {
            (None, None)
        };
        self.searches.push(NodeSearch {
            node: self.searches.len(),
            level,
            size: view.len(),
            chosen_attr: search.split.map(|s| s.test.attr()),
            best_attr,
            oracle_queries: search.stats.oracle_queries,
            repeats: search.repeats,
            correct,
        });
        search.split
    }
}

/// Grows a tree with [`q_choose_split`] at every node, drawing from `rng`
/// depth-first.
pub fn q_train_with<R: Rng + ?Sized>(data: &Dataset, config: &BuildConfig, seed: u64, rng: &mut R) -> Result<QBuildReport> {
    config.validate()?;
    let mut chooser = QuantumChooser {
        rng,
        repeats: config.repeats,
        verify: config.verify,
        verifier: Scanner::new(CounterBackend::TreeMap),
        searches: Vec::new(),
    };
    let tree = grow(data, config, &mut chooser);
    let per_node = chooser.searches;
    let nodes_correct = per_node
        .iter()
        .filter(|n| n.chosen_attr.is_some() && n.correct == Some(true))
        .count();
    Ok(QBuildReport {
        seed,
        internal_nodes: tree.internal_nodes(),
        total_oracle_queries: per_node.iter().map(|n| n.oracle_queries).sum(),
        nodes_correct,
        verified: config.verify,
        per_node,
        tree: Some(tree),
    })
}

/// Quantum build seeded from `config.seed` (required).
pub fn q_train(data: &Dataset, config: &BuildConfig) -> Result<QBuildReport> {
    let seed = config
        .seed
        .ok_or_else(|| Error::Config("the quantum backend needs a seed".into()))?;
    let config = BuildConfig {
        backend: Backend::Quantum,
        ..config.clone()
    };
    q_train_with(data, &config, seed, &mut ChaCha8Rng::seed_from_u64(seed))
}
