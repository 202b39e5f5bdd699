//! Splitting-criterion arithmetic (information, gain, potential information,
//! gain ratio) and the class counters used while scanning attributes.
//!
//! All logarithms are base 2, and `0 · log 0` is taken as 0.

use std::cell::Cell;
use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::treemap::TreeMap;

/// Potentials at or below this value mark a trivial partition.
pub const MIN_POTENTIAL: f64 = 1e-12;

/// Ratios closer than this are treated as ties by the classical argmax.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `n · log2(n)`, zero at zero.
#[inline]
pub fn xlog2x(n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        let x = n as f64;
        x * x.log2()
    }
}

/// Entropy of a count vector with known total, as `log2(n) - Σ c·log2(c) / n`.
#[inline]
pub(crate) fn entropy_from_sum(total: u64, xlogx_sum: f64) -> f64 {
    if total == 0 {
        0.0
    } else {
        (total as f64).log2() - xlogx_sum / total as f64
    }
}

/// Dense per-class counts `|C_j|` of a set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl ClassHistogram {
    pub fn new(classes: usize) -> Self {
        ClassHistogram {
            counts: vec![0; classes],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        ClassHistogram { counts, total }
    }

    pub fn add(&mut self, class: usize) {
        self.counts[class] += 1;
        self.total += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, class: usize) -> u64 {
        self.counts[class]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn relative_frequency(&self, class: usize) -> f64 {
        self.counts[class] as f64 / self.total as f64
    }

    /// Most frequent class, lowest index on ties. Class 0 for an empty histogram.
    pub fn majority(&self) -> usize {
        let mut best = 0;
        for (j, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = j;
            }
        }
        best
    }

    pub fn distinct_classes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Information content `I` of a class distribution, in bits.
pub fn information(hist: &ClassHistogram) -> Result<f64> {
    information_with(hist, f64::log2)
}

pub(crate) fn information_with(hist: &ClassHistogram, log: fn(f64) -> f64) -> Result<f64> {
    if hist.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    let n = hist.total() as f64;
    Ok(-hist
        .counts()
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let rf = c as f64 / n;
            rf * log(rf)
        })
        .sum::<f64>())
}

/// Information gain of splitting `parent` into `branches`.
pub fn gain(parent: &ClassHistogram, branches: &[ClassHistogram]) -> Result<f64> {
    gain_with(parent, branches, f64::log2)
}

pub(crate) fn gain_with(parent: &ClassHistogram, branches: &[ClassHistogram], log: fn(f64) -> f64) -> Result<f64> {
    let total: u64 = branches.iter().map(ClassHistogram::total).sum();
    if total != parent.total() {
        return Err(Error::Consistency(format!(
            "branch totals sum to {total}, parent has {}",
            parent.total()
        )));
    }
    for j in 0..parent.classes() {
        let sum: u64 = branches.iter().map(|b| b.counts().get(j).copied().unwrap_or(0)).sum();
        if sum != parent.count(j) {
            return Err(Error::Consistency(format!(
                "class {j}: branches hold {sum}, parent holds {}",
                parent.count(j)
            )));
        }
    }
    let n = parent.total() as f64;
    let mut remainder = 0.0;
    for b in branches.iter().filter(|b| b.total() > 0) {
        remainder += b.total() as f64 / n * information_with(b, log)?;
    }
    Ok(information_with(parent, log)? - remainder)
}

/// Potential information `P` of a partition with the given branch sizes.
pub fn potential_information(branch_sizes: &[u64]) -> Result<f64> {
    potential_with(branch_sizes, f64::log2)
}

pub(crate) fn potential_with(branch_sizes: &[u64], log: fn(f64) -> f64) -> Result<f64> {
    let n: u64 = branch_sizes.iter().sum();
    if n == 0 {
        return Err(Error::EmptyHistogram);
    }
    let n = n as f64;
    Ok(-branch_sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let f = s as f64 / n;
            f * log(f)
        })
        .sum::<f64>())
}

/// Score of a candidate test. `Invalid` marks a trivial partition and
/// orders below every valid score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum SplitScore {
    Invalid { gain: f64, potential: f64 },
    Valid { gain: f64, potential: f64, ratio: f64 },
}

impl SplitScore {
    pub fn gain(&self) -> f64 {
        match *self {
            SplitScore::Invalid { gain, .. } | SplitScore::Valid { gain, .. } => gain,
        }
    }

    pub fn potential(&self) -> f64 {
        match *self {
            SplitScore::Invalid { potential, .. } | SplitScore::Valid { potential, .. } => potential,
        }
    }

    pub fn ratio(&self) -> Option<f64> {
        match *self {
            SplitScore::Valid { ratio, .. } => Some(ratio),
            SplitScore::Invalid { .. } => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        matches!(self, SplitScore::Valid { .. })
    }

    /// Strictly better than `other` by more than `tolerance` in ratio.
    pub fn exceeds(&self, other: &SplitScore, tolerance: f64) -> bool {
        match (self.ratio(), other.ratio()) {
            (Some(a), Some(b)) => a > b + tolerance,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

impl Eq for SplitScore {}

impl PartialOrd for SplitScore {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order on ratios; all invalid scores compare equal.
impl Ord for SplitScore {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.ratio(), other.ratio()) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => Ordering::Greater,
            (None, Some(_)) => Ordering::Less,
            (None, None) => Ordering::Equal,
        }
    }
}

pub fn gain_ratio(gain: f64, potential: f64) -> SplitScore {
    if potential > MIN_POTENTIAL {
        SplitScore::Valid {
            gain,
            potential,
            ratio: gain / potential,
        }
    } else {
        SplitScore::Invalid { gain, potential }
    }
}

/// Counter-operation tally, split into allocation/erasure work and
/// per-key accesses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTally {
    pub init_clear: u64,
    pub access: u64,
}

impl OpTally {
    pub fn total(&self) -> u64 {
        self.init_clear + self.access
    }

    pub fn absorb(&mut self, other: OpTally) {
        self.init_clear += other.init_clear;
        self.access += other.access;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CounterBackend {
    /// Plain arrays over the whole key domain.
    Dense,
    /// Ordered map holding only non-zero keys.
    TreeMap,
}

/// Value storable in a class counter; `Default` is the implicit "zero".
pub trait CounterValue: Copy + Default + PartialEq {}

impl<T: Copy + Default + PartialEq> CounterValue for T {}

/// Array-backed counter over keys `0..domain`. Allocation and clearing cost
/// the whole domain.
#[derive(Debug, Clone)]
pub struct DenseClassCounter<V = u64> {
    slots: Vec<V>,
    init_clear: u64,
    access: Cell<u64>,
}

impl<V: CounterValue> DenseClassCounter<V> {
    pub fn new(domain: usize) -> Self {
        DenseClassCounter {
            slots: vec![V::default(); domain],
            init_clear: domain as u64,
            access: Cell::new(0),
        }
    }

    pub fn get(&self, key: usize) -> V {
        self.access.set(self.access.get() + 1);
        self.slots[key]
    }

    pub fn update(&mut self, key: usize, f: impl FnOnce(&mut V)) -> V {
        *self.access.get_mut() += 1;
        f(&mut self.slots[key]);
        self.slots[key]
    }

    pub fn entries(&self) -> Vec<(usize, V)> {
        self.access.set(self.access.get() + self.slots.len() as u64);
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != V::default())
            .map(|(k, v)| (k, *v))
            .collect()
    }

    pub fn clear(&mut self) {
        self.init_clear += self.slots.len() as u64;
        self.slots.fill(V::default());
    }

    pub fn stored_keys(&self) -> usize {
        self.slots.len()
    }

    pub fn tally(&self) -> OpTally {
        OpTally {
            init_clear: self.init_clear,
            access: self.access.get(),
        }
    }
}

/// Tree-Map counter: stores only keys whose value differs from zero, so
/// creation is O(1), clearing and iteration O(s), and each keyed operation
/// O(log s) for `s` stored keys.
#[derive(Debug, Clone)]
pub struct SparseClassCounter<V = u64> {
    map: TreeMap<V>,
    init_clear: u64,
    cleared: u64,
}

impl<V: CounterValue> Default for SparseClassCounter<V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<V: CounterValue> SparseClassCounter<V> {
    pub fn new() -> Self {
        SparseClassCounter {
            map: TreeMap::new(),
            init_clear: 1,
            cleared: 0,
        }
    }

    pub fn get(&self, key: usize) -> V {
        self.map.get(key).unwrap_or_default()
    }

    pub fn update(&mut self, key: usize, f: impl FnOnce(&mut V)) -> V {
        self.map.update(key, V::default(), f)
    }

    pub fn entries(&self) -> Vec<(usize, V)> {
        self.map.entries()
    }

    pub fn clear(&mut self) {
        let s = self.map.len() as u64;
        self.init_clear += s;
        self.cleared += s;
        self.map.clear();
    }

    pub fn stored_keys(&self) -> usize {
        self.map.len()
    }

    pub fn tally(&self) -> OpTally {
        OpTally {
            init_clear: self.init_clear,
            access: self.map.probe() - self.cleared,
        }
    }
}

/// A class counter whose representation is picked at runtime.
#[derive(Debug, Clone)]
pub enum ClassCounter<V = u64> {
    Dense(DenseClassCounter<V>),
    Sparse(SparseClassCounter<V>),
}

macro_rules! delegate {
    ($self:ident, $c:ident => $e:expr) => {
        match $self {
            ClassCounter::Dense($c) => $e,
            ClassCounter::Sparse($c) => $e,
        }
    };
}

impl<V: CounterValue> ClassCounter<V> {
    /// `domain` is the key-space size; only the dense backend pays for it.
    pub fn new(backend: CounterBackend, domain: usize) -> Self {
        match backend {
            CounterBackend::Dense => ClassCounter::Dense(DenseClassCounter::new(domain)),
            CounterBackend::TreeMap => ClassCounter::Sparse(SparseClassCounter::new()),
        }
    }

    pub fn get(&self, key: usize) -> V {
        delegate!(self, c => c.get(key))
    }

    pub fn update(&mut self, key: usize, f: impl FnOnce(&mut V)) -> V {
        delegate!(self, c => c.update(key, f))
    }

    pub fn entries(&self) -> Vec<(usize, V)> {
        delegate!(self, c => c.entries())
    }

    pub fn clear(&mut self) {
        delegate!(self, c => c.clear())
    }

    pub fn stored_keys(&self) -> usize {
        delegate!(self, c => c.stored_keys())
    }

    pub fn tally(&self) -> OpTally {
        delegate!(self, c => c.tally())
    }
}

impl ClassCounter<u64> {
    /// Adds one to `key`, returning the new count.
    pub fn increment(&mut self, key: usize) -> u64 {
        self.update(key, |c| *c += 1)
    }

    /// Subtracts one from `key`; `None` if it was already zero.
    pub fn decrement(&mut self, key: usize) -> Option<u64> {
        if self.get(key) == 0 {
            return None;
        }
        Some(self.update(key, |c| *c -= 1))
    }
}
