//! Synthetic datasets.
//!
//! Discrete attributes are uniform over `1..=T`, real attributes uniform over
//! `[0, 1)`. Labels come either uniformly from the present classes or from a
//! hidden random tree of configurable depth, with optional label noise.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Attribute, AttributeKind, AttributeSchema, Column, Dataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub samples: usize,
    pub attributes: Vec<AttributeKind>,
    /// Declared class alphabet size M; labels are `c0..c{M-1}`.
    pub classes: usize,
    /// Classes that actually occur (the first ones of the alphabet).
    pub present_classes: usize,
    /// Depth of the hidden labelling tree; 0 draws labels uniformly.
    pub planted_depth: usize,
    /// Probability of replacing a planted label by a uniform one.
    pub noise: f64,
}

impl SynthConfig {
    /// `d` real attributes, `classes` declared classes of which `min(classes, 4)` occur.
    pub fn real(samples: usize, d: usize, classes: usize) -> Self {
        SynthConfig {
            samples,
            attributes: vec![AttributeKind::Real; d],
            classes,
            present_classes: classes.min(4),
            planted_depth: 0,
            noise: 0.0,
        }
    }

    pub fn with_attributes(mut self, attributes: Vec<AttributeKind>) -> Self {
        self.attributes = attributes;
        self
    }

    pub fn planted(mut self, depth: usize, noise: f64) -> Self {
        self.planted_depth = depth;
        self.noise = noise;
        self
    }

    pub fn with_present_classes(mut self, present: usize) -> Self {
        self.present_classes = present;
        self
    }

    pub fn schema(&self) -> Result<AttributeSchema> {
        let attributes = self
            .attributes
            .iter()
            .enumerate()
            .map(|(j, &kind)| Attribute {
                name: format!("a{j}"),
                kind,
            })
            .collect();
        AttributeSchema::new(attributes, (0..self.classes).map(|c| format!("c{c}")).collect())
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be positive".into()));
        }
        if self.present_classes == 0 || self.present_classes > self.classes {
            return Err(Error::Config(format!(
                "present classes must lie in 1..={}, got {}",
                self.classes, self.present_classes
            )));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!("noise {} outside [0, 1]", self.noise)));
        }
        Ok(())
    }
}

enum Hidden {
    Leaf(usize),
    Threshold(usize, f64, Box<[Hidden; 2]>),
    Multiway(usize, Vec<Hidden>),
}

impl Hidden {
    fn grow<R: Rng + ?Sized>(kinds: &[AttributeKind], depth: usize, present: usize, rng: &mut R) -> Hidden {
        if depth == 0 {
            return Hidden::Leaf(rng.gen_range(0..present));
        }
        let attr = rng.gen_range(0..kinds.len());
        match kinds[attr] {
            AttributeKind::Real => {
                let theta = rng.gen_range(0.25..0.75);
                let left = Hidden::grow(kinds, depth - 1, present, rng);
                let mut right = Hidden::grow(kinds, depth - 1, present, rng);
                // keep sibling leaves apart so every planted test matters
                if let (Hidden::Leaf(a), Hidden::Leaf(b)) = (&left, &mut right) {
                    if *a == *b && present > 1 {
                        *b = (*a + 1 + rng.gen_range(0..present - 1)) % present;
                    }
                }
                Hidden::Threshold(attr, theta, Box::new([left, right]))
            }
            AttributeKind::Discrete { domain } => Hidden::Multiway(
                attr,
                (0..domain).map(|_| Hidden::grow(kinds, depth - 1, present, rng)).collect(),
            ),
        }
    }

    fn label(&self, row: &[f64]) -> usize {
        match self {
            Hidden::Leaf(c) => *c,
            Hidden::Threshold(attr, theta, children) => children[usize::from(row[*attr] > *theta)].label(row),
            Hidden::Multiway(attr, children) => children[row[*attr] as usize - 1].label(row),
        }
    }
}

pub fn generate<R: Rng + ?Sized>(config: &SynthConfig, rng: &mut R) -> Result<Dataset> {
    config.validate()?;
    let schema = config.schema()?;
    let n = config.samples;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            config
                .attributes
                .iter()
                .map(|kind| match *kind {
                    AttributeKind::Real => rng.gen::<f64>(),
                    AttributeKind::Discrete { domain } => rng.gen_range(1..=domain) as f64,
                })
                .collect()
        })
        .collect();
    let present = config.present_classes;
    let labels = if config.planted_depth == 0 {
        (0..n).map(|_| rng.gen_range(0..present)).collect()
    } else {
        let hidden = Hidden::grow(&config.attributes, config.planted_depth, present, rng);
        rows.iter()
            .map(|row| {
                if config.noise > 0.0 && rng.gen_bool(config.noise) {
                    rng.gen_range(0..present)
                } else {
                    hidden.label(row)
                }
            })
            .collect()
    };
    let columns = config
        .attributes
        .iter()
        .enumerate()
        .map(|(j, kind)| match kind {
            AttributeKind::Real => Column::Real(rows.iter().map(|r| r[j]).collect()),
            AttributeKind::Discrete { .. } => Column::Discrete(rows.iter().map(|r| r[j] as u32).collect()),
        })
        .collect();
    Dataset::new(schema, columns, labels)
}

/// Small random dataset with mixed attribute kinds and frequent value ties:
/// `N ∈ [2, max_n]`, `d ∈ [1, max_d]`, `M ∈ [2, max_m]`.
pub fn random_small<R: Rng + ?Sized>(max_n: usize, max_d: usize, max_m: usize, rng: &mut R) -> Dataset {
    let n = rng.gen_range(2..=max_n);
    let d = rng.gen_range(1..=max_d);
    let m = rng.gen_range(2..=max_m);
    let kinds: Vec<AttributeKind> = (0..d)
        .map(|_| {
            if rng.gen_bool(0.5) {
                AttributeKind::Real
            } else {
                AttributeKind::Discrete {
                    domain: rng.gen_range(2..=5),
                }
            }
        })
        .collect();
    let levels = rng.gen_range(2..=12);
    let columns = kinds
        .iter()
        .map(|kind| match *kind {
            AttributeKind::Real => Column::Real(
                (0..n)
                    .map(|_| rng.gen_range(0..levels) as f64 / levels as f64 - 0.5)
                    .collect(),
            ),
            AttributeKind::Discrete { domain } => Column::Discrete((0..n).map(|_| rng.gen_range(1..=domain)).collect()),
        })
        .collect();
    let mut classes: Vec<usize> = (0..m).collect();
    classes.shuffle(rng);
    let used = rng.gen_range(1..=m);
    let labels = (0..n).map(|_| classes[rng.gen_range(0..used)]).collect();
    let attributes = kinds
        .into_iter()
        .enumerate()
        .map(|(j, kind)| Attribute {
            name: format!("a{j}"),
            kind,
        })
        .collect();
    let schema = AttributeSchema::new(attributes, (0..m).map(|c| format!("c{c}")).collect()).expect("valid schema");
    Dataset::new(schema, columns, labels).expect("valid dataset")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_data_respects_config() {
        let config = SynthConfig::real(200, 3, 16)
            .with_attributes(vec![
                AttributeKind::Real,
                AttributeKind::Discrete { domain: 4 },
                AttributeKind::Real,
            ])
            .planted(2, 0.1);
        let ds = generate(&config, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.schema().class_count(), 16);
        assert!(ds.labels().iter().all(|&y| y < 4));
        for i in 0..ds.len() {
            let x = ds.value(0, i);
            assert!((0.0..1.0).contains(&x));
            let k = ds.value(1, i);
            assert!((1.0..=4.0).contains(&k) && k.fract() == 0.0);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let config = SynthConfig::real(50, 4, 3).planted(3, 0.0);
        let a = generate(&config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate(&config, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_planted_labels_follow_one_split() {
        let config = SynthConfig::real(300, 1, 2).planted(1, 0.0);
        let ds = generate(&config, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut order: Vec<usize> = (0..ds.len()).collect();
        order.sort_by(|&a, &b| ds.value(0, a).total_cmp(&ds.value(0, b)));
        let changes = order.windows(2).filter(|w| ds.label(w[0]) != ds.label(w[1])).count();
        assert_eq!(changes, 1);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate(&SynthConfig::real(0, 2, 2), &mut rng).is_err());
        assert!(generate(&SynthConfig::real(5, 2, 2).with_present_classes(3), &mut rng).is_err());
        assert!(generate(&SynthConfig::real(5, 2, 2).planted(1, 1.5), &mut rng).is_err());
    }

    #[test]
    fn random_small_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let ds = random_small(16, 4, 5, &mut rng);
            assert!((2..=16).contains(&ds.len()));
            assert!((1..=4).contains(&ds.dimension()));
            assert!((2..=5).contains(&ds.schema().class_count()));
        }
    }
}
