//! Consistent-hash ring with virtual nodes.
//!
//! Every label is placed on a 128-bit circle at the big-endian value of its
//! MD5 digest. A physical node owns `vnodes_per_node` positions, labelled
//! `<id>#<index>`. A key belongs to the first virtual node at or after its
//! position, wrapping at the top of the circle.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::hash::md5;

pub const DEFAULT_VNODES_PER_NODE: u32 = 100;

/// Identifier of a physical node, e.g. `n1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RingPosition(pub u128);

impl fmt::Display for RingPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#034x}", self.0)
    }
}

/// MD5 of the label's bytes, read as a big-endian integer.
pub fn position_of(label: &str) -> RingPosition {
    RingPosition(u128::from_be_bytes(md5(label.as_bytes())))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualNode {
    pub physical: NodeId,
    pub index: u32,
    pub position: RingPosition,
}

impl VirtualNode {
    fn new(physical: NodeId, index: u32) -> Self {
        let position = position_of(&format!("{physical}#{index}"));
        VirtualNode {
            physical,
            index,
            position,
        }
    }

    fn sort_key(&self) -> (RingPosition, &NodeId, u32) {
        (self.position, &self.physical, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ring {
    vnodes: Vec<VirtualNode>,
    vnodes_per_node: u32,
    members: usize,
}

impl Ring {
    pub fn build<I>(members: I, vnodes_per_node: u32) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<NodeId>,
    {
        if vnodes_per_node == 0 {
            return Err(Error::InvalidArgument("vnodes_per_node must be positive".into()));
        }
        let members: BTreeSet<NodeId> = members.into_iter().map(Into::into).collect();
        if members.is_empty() {
            return Err(Error::InvalidArgument("ring needs at least one member".into()));
        }
        let mut vnodes: Vec<VirtualNode> = members
            .iter()
            .flat_map(|m| (0..vnodes_per_node).map(move |i| VirtualNode::new(m.clone(), i)))
            .collect();
        vnodes.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(Ring {
            vnodes,
            vnodes_per_node,
            members: members.len(),
        })
    }

    pub fn vnodes(&self) -> &[VirtualNode] {
        &self.vnodes
    }

    pub fn vnodes_per_node(&self) -> u32 {
        self.vnodes_per_node
    }

    /// Number of distinct physical nodes on the ring.
    pub fn member_count(&self) -> usize {
        self.members
    }

    /// Up to `n` distinct physical nodes, walking clockwise from the key.
    pub fn preference_list(&self, key: &str, n: usize) -> Vec<NodeId> {
        let wanted = n.min(self.members);
        let start = self.successor_index(position_of(key));
        let mut out: Vec<NodeId> = Vec::with_capacity(wanted);
        for vnode in self.vnodes[start..].iter().chain(&self.vnodes[..start]) {
            if out.len() == wanted {
                break;
            }
            if !out.contains(&vnode.physical) {
                out.push(vnode.physical.clone());
            }
        }
        out
    }

    pub fn owner(&self, key: &str) -> &NodeId {
        &self.vnodes[self.successor_index(position_of(key))].physical
    }

    fn successor_index(&self, position: RingPosition) -> usize {
        let idx = self.vnodes.partition_point(|v| v.position < position);
        if idx == self.vnodes.len() {
            0
        } else {
            idx
        }
    }
}
