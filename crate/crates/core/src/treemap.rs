//! AVL-balanced ordered map from `usize` keys to small copyable values.
//!
//! Every node visited by a lookup, insertion or removal is counted in a
//! probe, so callers can check the logarithmic cost contract directly.
//! Clearing and in-order traversal cost one probe step per stored key.

use std::cell::Cell;
use std::cmp::Ordering;

type Link<V> = Option<Box<Node<V>>>;

#[derive(Debug, Clone)]
struct Node<V> {
    key: usize,
    value: V,
    height: u8,
    left: Link<V>,
    right: Link<V>,
}

#[derive(Debug, Clone, Default)]
pub struct TreeMap<V> {
    root: Link<V>,
    len: usize,
    probe: Cell<u64>,
}

impl<V: Copy> TreeMap<V> {
    pub fn new() -> Self {
        TreeMap {
            root: None,
            len: 0,
            probe: Cell::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Total nodes visited (plus keys dropped or traversed) since creation.
    pub fn probe(&self) -> u64 {
        self.probe.get()
    }

    fn touch(&self, n: u64) {
        self.probe.set(self.probe.get() + n);
    }

    pub fn get(&self, key: usize) -> Option<V> {
        let mut cur = self.root.as_deref();
        while let Some(node) = cur {
            self.touch(1);
            cur = match key.cmp(&node.key) {
                Ordering::Less => node.left.as_deref(),
                Ordering::Greater => node.right.as_deref(),
                Ordering::Equal => return Some(node.value),
            };
        }
        None
    }

    fn get_mut(&mut self, key: usize) -> Option<&mut V> {
        let mut steps = 0;
        let mut cur = self.root.as_deref_mut();
        let mut found = None;
        while let Some(node) = cur {
            steps += 1;
            match key.cmp(&node.key) {
                Ordering::Less => cur = node.left.as_deref_mut(),
                Ordering::Greater => cur = node.right.as_deref_mut(),
                Ordering::Equal => {
                    found = Some(&mut node.value);
                    break;
                }
            }
        }
        *self.probe.get_mut() += steps;
        found
    }

    /// Inserts or overwrites; returns the previous value.
    pub fn insert(&mut self, key: usize, value: V) -> Option<V> {
        if let Some(slot) = self.get_mut(key) {
            return Some(std::mem::replace(slot, value));
        }
        let mut steps = 0;
        let root = self.root.take();
        self.root = Some(insert_node(root, key, value, &mut steps));
        self.len += 1;
        self.touch(steps);
        None
    }

    /// Applies `f` to the value under `key`, starting from `default` when the
    /// key is absent. The key is removed if the result equals `default`.
    /// Returns the new value.
    pub fn update(&mut self, key: usize, default: V, f: impl FnOnce(&mut V)) -> V
    where
        V: PartialEq,
    {
        if let Some(slot) = self.get_mut(key) {
            f(slot);
            let new = *slot;
            if new == default {
                self.remove(key);
            }
            return new;
        }
        let mut value = default;
        f(&mut value);
        if value != default {
            self.insert(key, value);
        }
        value
    }

    pub fn remove(&mut self, key: usize) -> Option<V> {
        let mut steps = 0;
        let root = self.root.take();
        let (root, removed) = remove_node(root, key, &mut steps);
        self.root = root;
        self.touch(steps);
        if removed.is_some() {
            self.len -= 1;
        }
        removed
    }

    pub fn clear(&mut self) {
        self.touch(self.len as u64);
        self.root = None;
        self.len = 0;
    }

    /// In-order `(key, value)` pairs.
    pub fn entries(&self) -> Vec<(usize, V)> {
        let mut out = Vec::with_capacity(self.len);
        let mut stack: Vec<&Node<V>> = Vec::new();
        let mut cur = self.root.as_deref();
        loop {
            while let Some(node) = cur {
                stack.push(node);
                cur = node.left.as_deref();
            }
            match stack.pop() {
                None => break,
                Some(node) => {
                    out.push((node.key, node.value));
                    cur = node.right.as_deref();
                }
            }
        }
        self.touch(out.len() as u64);
        out
    }

    /// Height of the tree (0 when empty).
    pub fn height(&self) -> usize {
        height(&self.root) as usize
    }

    #[cfg(test)]
    fn check_invariants(&self) {
        fn walk<V>(link: &Link<V>, lo: Option<usize>, hi: Option<usize>) -> (u8, usize) {
            match link {
                None => (0, 0),
                Some(n) => {
                    assert!(lo.is_none_or(|lo| n.key > lo));
                    assert!(hi.is_none_or(|hi| n.key < hi));
                    let (lh, lc) = walk(&n.left, lo, Some(n.key));
                    let (rh, rc) = walk(&n.right, Some(n.key), hi);
                    assert!((lh as i32 - rh as i32).abs() <= 1, "unbalanced at {}", n.key);
                    assert_eq!(n.height, 1 + lh.max(rh));
                    (n.height, lc + rc + 1)
                }
            }
        }
        let (_, count) = walk(&self.root, None, None);
        assert_eq!(count, self.len);
    }
}

fn height<V>(link: &Link<V>) -> u8 {
    link.as_ref().map_or(0, |n| n.height)
}

fn fix_height<V>(node: &mut Node<V>) {
    node.height = 1 + height(&node.left).max(height(&node.right));
}

fn rotate_right<V>(mut node: Box<Node<V>>) -> Box<Node<V>> {
    let mut pivot = node.left.take().expect("rotate_right needs a left child");
    node.left = pivot.right.take();
    fix_height(&mut node);
    pivot.right = Some(node);
    fix_height(&mut pivot);
    pivot
}

fn rotate_left<V>(mut node: Box<Node<V>>) -> Box<Node<V>> {
    let mut pivot = node.right.take().expect("rotate_left needs a right child");
    node.right = pivot.left.take();
    fix_height(&mut node);
    pivot.left = Some(node);
    fix_height(&mut pivot);
    pivot
}

fn rebalance<V>(mut node: Box<Node<V>>) -> Box<Node<V>> {
    fix_height(&mut node);
    let balance = height(&node.left) as i32 - height(&node.right) as i32;
    if balance > 1 {
        let left = node.left.take().unwrap();
        node.left = Some(if height(&left.right) > height(&left.left) {
            rotate_left(left)
        } else {
            left
        });
        rotate_right(node)
    } else if balance < -1 {
        let right = node.right.take().unwrap();
        node.right = Some(if height(&right.left) > height(&right.right) {
            rotate_right(right)
        } else {
            right
        });
        rotate_left(node)
    } else {
        node
    }
}

fn insert_node<V>(link: Link<V>, key: usize, value: V, steps: &mut u64) -> Box<Node<V>> {
    match link {
        None => Box::new(Node {
            key,
            value,
            height: 1,
            left: None,
            right: None,
        }),
        Some(mut node) => {
            *steps += 1;
            match key.cmp(&node.key) {
                Ordering::Less => node.left = Some(insert_node(node.left.take(), key, value, steps)),
                Ordering::Greater => node.right = Some(insert_node(node.right.take(), key, value, steps)),
                Ordering::Equal => {
                    node.value = value;
                    return node;
                }
            }
            rebalance(node)
        }
    }
}

fn remove_node<V>(link: Link<V>, key: usize, steps: &mut u64) -> (Link<V>, Option<V>) {
    let Some(mut node) = link else {
        return (None, None);
    };
    *steps += 1;
    match key.cmp(&node.key) {
        Ordering::Less => {
            let (left, removed) = remove_node(node.left.take(), key, steps);
            node.left = left;
            (Some(rebalance(node)), removed)
        }
        Ordering::Greater => {
            let (right, removed) = remove_node(node.right.take(), key, steps);
            node.right = right;
            (Some(rebalance(node)), removed)
        }
        Ordering::Equal => {
            let Node {
                value, left, right, ..
            } = *node;
            let replacement = match (left, right) {
                (None, None) => None,
                (Some(l), None) => Some(l),
                (None, Some(r)) => Some(r),
                (Some(l), Some(r)) => {
                    let (rest, mut min) = take_min(r, steps);
                    min.left = Some(l);
                    min.right = rest;
                    Some(rebalance(min))
                }
            };
            (replacement, Some(value))
        }
    }
}

/// Detaches the minimum node of a subtree, returning `(remaining, min)`.
fn take_min<V>(mut node: Box<Node<V>>, steps: &mut u64) -> (Link<V>, Box<Node<V>>) {
    *steps += 1;
    match node.left.take() {
        None => (node.right.take(), node),
        Some(left) => {
            let (rest, min) = take_min(left, steps);
            node.left = rest;
            (Some(rebalance(node)), min)
        }
    }
}
