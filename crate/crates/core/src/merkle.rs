//! Field-level Merkle trees and version diffing.
//!
//! Leaves are `MD5(name ‖ 0x00 ‖ canonical value bytes)`, sorted by field
//! name. Parents hash the concatenation of two children; a trailing unpaired
//! node is promoted unchanged. The tree of the empty object has root
//! `MD5(0x00)`.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::hash::{md5, md5_concat, Digest};
use crate::value::{validate_field_name, FieldValue, Object};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldLeaf {
    pub name: String,
    pub digest: Digest,
}

pub fn leaf_digest(name: &str, value: &FieldValue) -> Digest {
    md5_concat(&[name.as_bytes(), &[0x00], &value.canonical_bytes()])
}

pub fn empty_root() -> Digest {
    md5(&[0x00])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldTree {
    leaves: Vec<FieldLeaf>,
    /// `levels[0]` holds the leaf digests, the last level holds the root.
    levels: Vec<Vec<Digest>>,
    root: Digest,
}

/// Counters collected while diffing two trees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DiffStats {
    /// Digest comparisons at any level, the root included.
    pub nodes_compared: usize,
    /// Digest comparisons between leaves.
    pub leaves_visited: usize,
}

impl FieldTree {
    pub fn build(object: &Object) -> Result<Self> {
        // BTreeMap iteration is already in byte order of the names
        let mut leaves = Vec::with_capacity(object.len());
        for (name, value) in object {
            validate_field_name(name)?;
            leaves.push(FieldLeaf {
                name: name.clone(),
                digest: leaf_digest(name, value),
            });
        }
        if leaves.is_empty() {
            return Ok(FieldTree {
                leaves,
                levels: Vec::new(),
                root: empty_root(),
            });
        }

        let mut levels = vec![leaves.iter().map(|l| l.digest).collect::<Vec<_>>()];
        while levels.last().map_or(0, Vec::len) > 1 {
            let next = levels
                .last()
                .unwrap()
                .chunks(2)
                .map(|pair| match pair {
                    [left, right] => md5_concat(&[left, right]),
                    [single] => *single,
                    _ => unreachable!(),
                })
                .collect();
            levels.push(next);
        }
        let root = levels.last().unwrap()[0];
        Ok(FieldTree {
            leaves,
            levels,
            root,
        })
    }

    pub fn root(&self) -> Digest {
        self.root
    }

    pub fn leaves(&self) -> &[FieldLeaf] {
        &self.leaves
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Names of fields added, removed or changed between `self` and `newer`.
    pub fn diff(&self, newer: &FieldTree) -> BTreeSet<String> {
        self.diff_with_stats(newer).0
    }

    pub fn diff_with_stats(&self, newer: &FieldTree) -> (BTreeSet<String>, DiffStats) {
        let mut stats = DiffStats {
            nodes_compared: 1,
            leaves_visited: 0,
        };
        let mut changed = BTreeSet::new();
        if self.root == newer.root {
            return (changed, stats);
        }
        if self.same_shape(newer) {
            let top = self.levels.len() - 1;
            if top == 0 {
                stats.leaves_visited += 1;
                changed.insert(self.leaves[0].name.clone());
            } else {
                self.descend(newer, top, 0, &mut changed, &mut stats);
            }
        } else {
            self.merge_walk(newer, &mut changed, &mut stats);
        }
        (changed, stats)
    }

    fn same_shape(&self, other: &FieldTree) -> bool {
        !self.leaves.is_empty()
            && self.leaves.len() == other.leaves.len()
            && self
                .leaves
                .iter()
                .zip(&other.leaves)
                .all(|(a, b)| a.name == b.name)
    }

    /// Visits the children of a node whose digests already differ.
    fn descend(
        &self,
        other: &FieldTree,
        level: usize,
        index: usize,
        changed: &mut BTreeSet<String>,
        stats: &mut DiffStats,
    ) {
        let below = level - 1;
        let left = 2 * index;
        let right = left + 1;
        if right >= self.levels[below].len() {
            // carried node: same digest one level down, nothing to compare
            if below == 0 {
                changed.insert(self.leaves[left].name.clone());
            } else {
                self.descend(other, below, left, changed, stats);
            }
            return;
        }
        for child in [left, right] {
            stats.nodes_compared += 1;
            if below == 0 {
                stats.leaves_visited += 1;
            }
            if self.levels[below][child] == other.levels[below][child] {
                continue;
            }
            if below == 0 {
                changed.insert(self.leaves[child].name.clone());
            } else {
                self.descend(other, below, child, changed, stats);
            }
        }
    }

    /// Sorted merge over both leaf lists, for trees whose field sets differ.
    fn merge_walk(&self, other: &FieldTree, changed: &mut BTreeSet<String>, stats: &mut DiffStats) {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.leaves, &other.leaves);
        while i < a.len() || j < b.len() {
            stats.leaves_visited += 1;
            stats.nodes_compared += 1;
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.name == y.name => {
                    if x.digest != y.digest {
                        changed.insert(x.name.clone());
                    }
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.name < y.name => {
                    changed.insert(x.name.clone());
                    i += 1;
                }
                (Some(_), Some(y)) => {
                    changed.insert(y.name.clone());
                    j += 1;
                }
                (Some(x), None) => {
                    changed.insert(x.name.clone());
                    i += 1;
                }
                (None, Some(y)) => {
                    changed.insert(y.name.clone());
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
    }
}

/// Convenience: builds both trees and diffs them.
pub fn diff_objects(old: &Object, new: &Object) -> Result<BTreeSet<String>> {
    Ok(FieldTree::build(old)?.diff(&FieldTree::build(new)?))
}
