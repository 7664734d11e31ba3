//! Heartbeat gossip membership.
//!
//! Each node keeps a table of heartbeat counters. Tables are exchanged with a
//! few random peers every gossip interval and merged by pointwise maximum. A
//! member whose heartbeat has not advanced locally for longer than
//! `suspect_after` is marked suspect and left out of the ring.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::ring::NodeId;
use crate::SimTime;

pub const DEFAULT_FANOUT: usize = 2;
pub const DEFAULT_SUSPECT_AFTER: SimTime = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Alive,
    Suspect,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemberRecord {
    pub heartbeat: u64,
    /// Local time at which `heartbeat` last increased in this table.
    pub last_advanced: SimTime,
    pub status: Status,
}

impl MemberRecord {
    fn fresh(heartbeat: u64, now: SimTime) -> Self {
        MemberRecord {
            heartbeat,
            last_advanced: now,
            status: Status::Alive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipTable {
    self_id: NodeId,
    records: BTreeMap<NodeId, MemberRecord>,
}

impl MembershipTable {
    /// A table listing every member at heartbeat 0, all alive.
    pub fn bootstrap<'a>(self_id: NodeId, members: impl IntoIterator<Item = &'a NodeId>) -> Self {
        let mut records: BTreeMap<NodeId, MemberRecord> = members
            .into_iter()
            .map(|m| (m.clone(), MemberRecord::fresh(0, 0)))
            .collect();
        records
            .entry(self_id.clone())
            .or_insert_with(|| MemberRecord::fresh(0, 0));
        MembershipTable { self_id, records }
    }

    pub fn self_id(&self) -> &NodeId {
        &self.self_id
    }

    pub fn records(&self) -> &BTreeMap<NodeId, MemberRecord> {
        &self.records
    }

    pub fn get(&self, node: &NodeId) -> Option<&MemberRecord> {
        self.records.get(node)
    }

    pub fn heartbeat(&self, node: &NodeId) -> Option<u64> {
        self.records.get(node).map(|r| r.heartbeat)
    }

    pub fn tick_heartbeat(&mut self, now: SimTime) {
        let me = self.self_mut();
        me.heartbeat += 1;
        me.last_advanced = now;
        me.status = Status::Alive;
    }

    /// Picks up to `fanout` distinct peers other than self, uniformly.
    pub fn select_gossip_peers<R: Rng + ?Sized>(&self, fanout: usize, rng: &mut R) -> BTreeSet<NodeId> {
        let others: Vec<&NodeId> = self.records.keys().filter(|id| **id != self.self_id).collect();
        let amount = fanout.min(others.len());
        if amount == 0 {
            return BTreeSet::new();
        }
        rand::seq::index::sample(rng, others.len(), amount)
            .into_iter()
            .map(|i| others[i].clone())
            .collect()
    }

    /// Pointwise maximum of heartbeats; unknown members are adopted.
    pub fn merge(&mut self, remote: &MembershipTable, now: SimTime) {
        for (id, theirs) in &remote.records {
            match self.records.get_mut(id) {
                Some(ours) => {
                    if theirs.heartbeat > ours.heartbeat {
                        ours.heartbeat = theirs.heartbeat;
                        ours.last_advanced = now;
                        ours.status = Status::Alive;
                    }
                }
                None => {
                    self.records
                        .insert(id.clone(), MemberRecord::fresh(theirs.heartbeat, now));
                }
            }
        }
    }

    /// Marks members whose heartbeat stalled for more than `suspect_after`.
    pub fn detect_failures(&mut self, now: SimTime, suspect_after: SimTime) {
        for (id, record) in self.records.iter_mut() {
            record.status = if *id != self.self_id && now.saturating_sub(record.last_advanced) > suspect_after {
                Status::Suspect
            } else {
                Status::Alive
            };
        }
    }

    /// Restarts every failure-detection timer at `now`. Used when a paused
    /// node resumes, since its observations are stale rather than negative.
    pub fn refresh(&mut self, now: SimTime) {
        for record in self.records.values_mut() {
            record.last_advanced = now;
            record.status = Status::Alive;
        }
    }

    pub fn alive_members(&self) -> Vec<NodeId> {
        self.records
            .iter()
            .filter(|(_, r)| r.status == Status::Alive)
            .map(|(id, _)| id.clone())
            .collect()
    }

    fn self_mut(&mut self) -> &mut MemberRecord {
        let id = self.self_id.clone();
        self.records.entry(id).or_insert_with(|| MemberRecord::fresh(0, 0))
    }
}
