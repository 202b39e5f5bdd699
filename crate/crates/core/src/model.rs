//! JSON model files.
//!
//! Layout: `{schema, class_label_mapping, root}` where each node is
//! `{kind, attr?, theta?, children? | class?, support}`. Thresholds are
//! written with 17 significant digits so files are byte-stable and
//! round-trip exactly. Build statistics are not persisted.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::builder::{BuildStats, DecisionTree, TreeNode};
use crate::criteria::ClassHistogram;
use crate::dataset::{Attribute, AttributeKind, AttributeSchema};
use crate::error::{Error, Result};
use crate::splitscan::SplitTest;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Real17(f64);

impl Serialize for Real17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Real17 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Real17)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema: SchemaSection,
    class_label_mapping: Vec<String>,
    root: NodeRecord,
}

#[derive(Serialize, Deserialize)]
struct SchemaSection {
    attributes: Vec<Attribute>,
    classes: usize,
}

#[derive(Serialize, Deserialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum NodeKind {
    Internal,
    Leaf,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attr: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<Real17>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<NodeRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<usize>,
    support: Vec<u64>,
}

fn record(node: &TreeNode) -> NodeRecord {
    match node {
        TreeNode::Leaf { class, support } => NodeRecord {
            kind: NodeKind::Leaf,
            attr: None,
            theta: None,
            children: None,
            class: Some(*class),
            support: support.counts().to_vec(),
        },
        TreeNode::Internal {
            test,
            children,
            support,
        } => NodeRecord {
            kind: NodeKind::Internal,
            attr: Some(test.attr()),
            theta: match *test {
                SplitTest::Threshold { theta, .. } => Some(Real17(theta)),
                SplitTest::Multiway { .. } => None,
            },
            children: Some(children.iter().map(record).collect()),
            class: None,
            support: support.counts().to_vec(),
        },
    }
}

pub fn to_json(tree: &DecisionTree) -> String {
    let file = ModelFile {
        schema: SchemaSection {
            attributes: tree.schema.attributes().to_vec(),
            classes: tree.schema.class_count(),
        },
        class_label_mapping: tree.schema.class_labels().to_vec(),
        root: record(&tree.root),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("model serialisation is infallible");
    out.push('\n');
    out
}

fn rebuild(rec: NodeRecord, schema: &AttributeSchema) -> Result<TreeNode> {
    let m = schema.class_count();
    if rec.support.len() != m {
        return Err(Error::Model(format!("support has {} entries, expected {m}", rec.support.len())));
    }
    let support = ClassHistogram::from_counts(rec.support);
    match rec.kind {
        NodeKind::Leaf => {
            let class = rec.class.ok_or_else(|| Error::Model("leaf without class".into()))?;
            if class >= m {
                return Err(Error::Model(format!("leaf class {class} out of range")));
            }
            Ok(TreeNode::Leaf { class, support })
        }
        NodeKind::Internal => {
            let attr = rec.attr.ok_or_else(|| Error::Model("internal node without attr".into()))?;
            if attr >= schema.len() {
                return Err(Error::Model(format!("attribute {attr} out of range")));
            }
            let test = match (schema.kind(attr), rec.theta) {
                (AttributeKind::Real, Some(Real17(theta))) => SplitTest::Threshold { attr, theta },
                (AttributeKind::Discrete { domain }, None) => SplitTest::Multiway { attr, branches: domain },
                _ => return Err(Error::Model(format!("test on attribute {attr} does not match its kind"))),
            };
            let children = rec.children.ok_or_else(|| Error::Model("internal node without children".into()))?;
            if children.len() != test.branch_count() {
                return Err(Error::Model(format!(
                    "node on attribute {attr} has {} children, expected {}",
                    children.len(),
                    test.branch_count()
                )));
            }
            let children = children
                .into_iter()
                .map(|c| rebuild(c, schema))
                .collect::<Result<Vec<_>>>()?;
            Ok(TreeNode::Internal {
                test,
                children,
                support,
            })
        }
    }
}

pub fn from_json(text: &str) -> Result<DecisionTree> {
    let file: ModelFile = serde_json::from_str(text)?;
    if file.schema.classes != file.class_label_mapping.len() {
        return Err(Error::Model(format!(
            "{} classes declared, {} labels mapped",
            file.schema.classes,
            file.class_label_mapping.len()
        )));
    }
    let schema = AttributeSchema::new(file.schema.attributes, file.class_label_mapping)?;
    let root = rebuild(file.root, &schema)?;
    Ok(DecisionTree {
        max_height: root.depth(),
        root,
        schema,
        stats: BuildStats::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{train, BuildConfig};
    use crate::dataset::Dataset;

    fn mixed() -> Dataset {
        let schema = AttributeSchema::new(
            vec![Attribute::real("x"), Attribute::discrete("k", 3)],
            vec!["no".into(), "yes".into()],
        )
        .unwrap();
        let rows = [
            vec![0.1, 1.0],
            vec![0.2, 2.0],
            vec![0.3, 1.0],
            vec![0.7, 3.0],
            vec![0.9, 3.0],
            vec![0.35, 2.0],
        ];
        Dataset::from_rows(schema, &rows, vec![0, 0, 0, 1, 1, 1]).unwrap()
    }

    #[test]
    fn round_trip_preserves_tree_and_bytes() {
        let data = mixed();
        let tree = train(&data, &BuildConfig::default()).unwrap();
        let json = to_json(&tree);
        let back = from_json(&json).unwrap();
        assert_eq!(back.root, tree.root);
        assert_eq!(back.schema, tree.schema);
        assert_eq!(to_json(&back), json);
    }

    #[test]
    fn thresholds_use_seventeen_digits() {
        let data = mixed();
        let tree = train(&data, &BuildConfig::default()).unwrap();
        let json = to_json(&tree);
        let theta_line = json.lines().find(|l| l.contains("\"theta\"")).expect("a threshold test");
        let number = theta_line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
        let mantissa = number.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17, "{number}");
    }

    #[test]
    fn field_order_is_fixed() {
        let data = mixed();
        let json = to_json(&train(&data, &BuildConfig::default()).unwrap());
        let pos = |k: &str| json.find(k).unwrap();
        assert!(pos("\"schema\"") < pos("\"class_label_mapping\""));
        assert!(pos("\"class_label_mapping\"") < pos("\"root\""));
        assert!(pos("\"kind\"") < pos("\"attr\""));
        assert!(pos("\"attr\"") < pos("\"children\""));
    }

    #[test]
    fn malformed_models_are_rejected() {
        let data = mixed();
        let json = to_json(&train(&data, &BuildConfig::default()).unwrap());
        assert!(from_json(&json.replace("\"classes\": 2", "\"classes\": 3")).is_err());
        assert!(from_json("{}").is_err());
    }
}
