//! Decision tree induction with gain-ratio splits, a sparse ordered-map
//! counter backend, and a simulated quantum maximum search over attributes.

pub mod bench;
pub mod builder;
pub mod criteria;
pub mod dataset;
pub mod error;
pub mod model;
pub mod oracle;
pub mod qbuilder;
pub mod qsearch;
pub mod splitscan;
pub mod suites;
pub mod synth;
pub mod treemap;

pub use builder::{choose_split, classify, form_tree, train, Backend, BuildConfig, BuildStats, DecisionTree, TreeNode};
pub use criteria::{gain, gain_ratio, information, potential_information, ClassHistogram, CounterBackend, OpTally, SplitScore};
pub use dataset::{load_csv, read_csv, Attribute, AttributeKind, AttributeSchema, Dataset, SubsetView};
pub use error::{Error, Result};
pub use qbuilder::{q_choose_split, q_train, QBuildReport};
pub use qsearch::{durr_hoyer_max, query_budget, repeated_max, ScoringOracle, SearchStats};
pub use splitscan::{process_attribute, ScoredSplit, SplitTest};
