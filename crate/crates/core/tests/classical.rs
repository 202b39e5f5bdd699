use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qc50_core::builder::{choose_split, train, Backend, BuildConfig, TreeNode};
use qc50_core::criteria::CounterBackend;
use qc50_core::dataset::{Attribute, AttributeSchema, Column, Dataset, SubsetView};
use qc50_core::model::to_json;
use qc50_core::oracle::{brute_force_best_split, reference_tree};
use qc50_core::splitscan::{Scanner, SplitTest};
use qc50_core::synth::random_small;

fn small(seed: u64) -> Dataset {
    random_small(64, 6, 4, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn choose_split_agrees_with_oracle() {
    for seed in 0..300 {
        let data = small(seed);
        let view = data.full_view();
        let oracle = brute_force_best_split(&view);
        match (choose_split(&view), oracle.best_row()) {
            (None, None) => {}
            (Some(c), Some(o)) => {
                assert_eq!(c.test, o.test, "seed {seed}");
                assert!((c.score.ratio().unwrap() - o.ratio.unwrap()).abs() <= 1e-9);
                assert!((c.score.gain() - o.gain).abs() <= 1e-9);
            }
            (c, o) => panic!("seed {seed}: {c:?} vs {o:?}"),
        }
    }
}

#[test]
fn trained_tree_matches_oracle_tree() {
    for seed in 0..100 {
        let data = small(seed);
        let config = BuildConfig::default().with_max_height(4);
        let tree = train(&data, &config).unwrap();
        assert_eq!(tree.root, reference_tree(&data, 4, 2), "seed {seed}");
    }
}

#[test]
fn backends_serialize_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..100 {
        let data = random_small(128, 8, 6, &mut rng);
        let a = train(&data, &BuildConfig::default().with_backend(Backend::Baseline)).unwrap();
        let b = train(&data, &BuildConfig::default().with_backend(Backend::TreeMap)).unwrap();
        assert_eq!(to_json(&a), to_json(&b));
        assert_eq!(a.stats.evaluations, b.stats.evaluations);
    }
}

fn max_depth(node: &TreeNode) -> usize {
    match node {
        TreeNode::Leaf { .. } => 0,
        TreeNode::Internal { children, .. } => 1 + children.iter().map(max_depth).max().unwrap(),
    }
}

/// Children supports add up to the parent support, level by level.
fn conserved(node: &TreeNode) -> bool {
    match node {
        TreeNode::Leaf { .. } => true,
        TreeNode::Internal { children, support, .. } => {
            let mut sum = vec![0u64; support.classes()];
            for c in children {
                for (s, &n) in sum.iter_mut().zip(c.support().counts()) {
                    *s += n;
                }
            }
            sum == support.counts() && children.iter().all(conserved)
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn height_bound_and_conservation(seed in any::<u64>(), h in 0usize..5) {
        let data = random_small(96, 5, 5, &mut ChaCha8Rng::seed_from_u64(seed));
        let tree = train(&data, &BuildConfig::default().with_max_height(h)).unwrap();
        prop_assert!(max_depth(&tree.root) <= h);
        prop_assert!(conserved(&tree.root));
        prop_assert_eq!(tree.root.support().total(), data.len() as u64);
        prop_assert_eq!(tree.stats.internal_nodes, tree.internal_nodes());
        let searched: u64 = tree.stats.levels.iter().map(|l| l.split_searches).sum();
        prop_assert_eq!(searched, tree.stats.split_searches);
    }

    #[test]
    fn classical_evaluations_are_d_per_search(seed in any::<u64>()) {
        let data = random_small(64, 6, 4, &mut ChaCha8Rng::seed_from_u64(seed));
        let tree = train(&data, &BuildConfig::default()).unwrap();
        prop_assert_eq!(tree.stats.evaluations, tree.stats.split_searches * data.dimension() as u64);
    }

    #[test]
    fn training_points_reach_consistent_leaves(seed in any::<u64>()) {
        let data = random_small(64, 4, 3, &mut ChaCha8Rng::seed_from_u64(seed));
        let tree = train(&data, &BuildConfig::default().with_max_height(20)).unwrap();
        for i in 0..data.len() {
            prop_assert!(tree.classify(&data.row(i)).unwrap() < data.schema().class_count());
        }
    }
}

#[test]
fn partitions_cover_the_view() {
    for seed in 0..50 {
        let data = small(seed);
        let view = data.full_view();
        if let Some(split) = choose_split(&view) {
            let parts = view.partition(&split.test);
            let mut all: Vec<usize> = parts.iter().flat_map(|p| p.indices().to_vec()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
            if let SplitTest::Threshold { attr, theta } = split.test {
                assert!(parts[0].indices().iter().all(|&i| data.value(attr, i) <= theta));
                assert!(parts[1].indices().iter().all(|&i| data.value(attr, i) > theta));
            }
        }
    }
}

fn three_class_node(m: usize, classes: [usize; 3]) -> Dataset {
    let schema = AttributeSchema::new(
        vec![Attribute::real("x"), Attribute::discrete("k", 4)],
        (0..m).map(|c| format!("c{c}")).collect(),
    )
    .unwrap();
    let n = 60;
    let xs = (0..n).map(|i| (i % 17) as f64).collect();
    let ks = (0..n).map(|i| (i % 4) as u32 + 1).collect();
    let labels = (0..n).map(|i| classes[i % 3]).collect();
    Dataset::new(schema, vec![Column::Real(xs), Column::Discrete(ks)], labels).unwrap()
}

#[test]
fn treemap_initialisation_tracks_present_classes() {
    let data = three_class_node(256, [5, 130, 201]);
    let view = SubsetView::new(&data, (0..data.len()).collect()).unwrap();
    for attr in 0..2 {
        let mut sparse = Scanner::new(CounterBackend::TreeMap);
        sparse.attribute(&view, attr);
        let mut dense = Scanner::new(CounterBackend::Dense);
        dense.attribute(&view, attr);
        // at most 3 classes (times 4 values for the class-value pairs) are ever stored
        let cap = if attr == 0 { 4 * 3 } else { 4 * 3 * 4 + 4 * 4 };
        assert!(sparse.tally().init_clear <= cap, "attr {attr}: {:?}", sparse.tally());
        assert!(dense.tally().init_clear >= 256);
    }
}

#[test]
fn treemap_tally_is_independent_of_declared_classes() {
    let tallies: Vec<_> = [4usize, 64, 256]
        .iter()
        .map(|&m| {
            let data = three_class_node(m, [0, 1, 2]);
            train(&data, &BuildConfig::default()).unwrap().stats.counter_ops
        })
        .collect();
    assert_eq!(tallies[0], tallies[1]);
    assert_eq!(tallies[1], tallies[2]);
}
