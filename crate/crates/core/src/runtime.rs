//! Deterministic discrete-event runtime.
//!
//! The whole cluster lives in one [`World`]: a priority queue of events
//! ordered by `(time, seq)`, a set of node actors and the stream sinks. One
//! seeded ChaCha generator supplies every random draw (message latency, drops
//! and gossip peers), consumed in dispatch order, so a run is a pure function
//! of its configuration, seed and inputs.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::membership::{MembershipTable, DEFAULT_FANOUT, DEFAULT_SUSPECT_AFTER};
use crate::output::Record;
use crate::ring::{NodeId, Ring, DEFAULT_VNODES_PER_NODE};
use crate::store::{DiffJob, ObjectRecord, Strategy, StreamRequest, StreamView, VersionStamp};
use crate::value::Object;
use crate::SimTime;

/// Identifier of a client operation submitted to the world.
pub type OpId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nodes: usize,
    pub vnodes_per_node: u32,
    pub replication: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub min_latency: SimTime,
    pub max_latency: SimTime,
    pub drop_rate: f64,
    pub gossip_interval: SimTime,
    pub fanout: usize,
    pub suspect_after: SimTime,
    pub compaction_delay: SimTime,
    pub diff_delay: SimTime,
    /// Emit an `event` record for every dispatched event.
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 3,
            vnodes_per_node: DEFAULT_VNODES_PER_NODE,
            replication: 3,
            strategy: Strategy::VersionDiff,
            seed: 0,
            min_latency: 1,
            max_latency: 3,
            drop_rate: 0.0,
            gossip_interval: 1,
            fanout: DEFAULT_FANOUT,
            suspect_after: DEFAULT_SUSPECT_AFTER,
            compaction_delay: 3,
            diff_delay: 2,
            trace: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if self.nodes == 0 {
            return fail("nodes must be positive");
        }
        if self.vnodes_per_node == 0 {
            return fail("vnodes must be positive");
        }
        if self.replication == 0 {
            return fail("replication must be positive");
        }
        if self.min_latency > self.max_latency {
            return fail("min latency exceeds max latency");
        }
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return fail("drop rate must lie in [0, 1]");
        }
        if self.gossip_interval == 0 {
            return fail("gossip interval must be positive");
        }
        if self.fanout == 0 {
            return fail("fanout must be positive");
        }
        if self.suspect_after == 0 {
            return fail("suspect-after must be positive");
        }
        Ok(())
    }

    /// Replication factor clamped to the cluster size.
    pub fn effective_replication(&self) -> usize {
        self.replication.min(self.nodes)
    }

    /// Time an entry node waits for a replica before trying the next one.
    pub fn request_timeout(&self) -> SimTime {
        2 * self.max_latency + 1
    }

    pub fn node_id(index: usize) -> NodeId {
        NodeId::new(format!("n{}", index + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClientRequest {
    Get { key: String },
    Put { key: String, object: Object },
    Update { key: String, sparse: Object },
    Stream(StreamRequest),
    Unstream { key: String, stream_id: String },
}

impl ClientRequest {
    pub fn key(&self) -> &str {
        match self {
            ClientRequest::Get { key }
            | ClientRequest::Put { key, .. }
            | ClientRequest::Update { key, .. }
            | ClientRequest::Unstream { key, .. } => key,
            ClientRequest::Stream(req) => &req.key,
        }
    }

    pub fn op_name(&self) -> &'static str {
        match self {
            ClientRequest::Get { .. } => "get",
            ClientRequest::Put { .. } => "put",
            ClientRequest::Update { .. } => "update",
            ClientRequest::Stream(_) => "stream",
            ClientRequest::Unstream { .. } => "unstream",
        }
    }

    pub(crate) fn to_body(&self, op: OpId) -> Body {
        match self.clone() {
            ClientRequest::Get { key } => Body::GetReq { op, key },
            ClientRequest::Put { key, object } => Body::PutReq { op, key, object },
            ClientRequest::Update { key, sparse } => Body::UpdateReq { op, key, sparse },
            ClientRequest::Stream(request) => Body::StreamReq { op, request },
            ClientRequest::Unstream { key, stream_id } => Body::UnstreamReq { op, key, stream_id },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamChange {
    Register(StreamRequest),
    Deregister(String),
    /// Sequence counters after an asynchronous emission.
    Progress(BTreeMap<String, u64>),
}

/// Inter-node message bodies, plus the self-addressed diff and compaction
/// tasks and sink deliveries.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    GetReq { op: OpId, key: String },
    GetResp { op: OpId },
    PutReq { op: OpId, key: String, object: Object },
    UpdateReq { op: OpId, key: String, sparse: Object },
    StreamReq { op: OpId, request: StreamRequest },
    UnstreamReq { op: OpId, key: String, stream_id: String },
    Ack { op: OpId },
    Replicate {
        key: String,
        object: Object,
        stamp: VersionStamp,
        seqs: BTreeMap<String, u64>,
    },
    ReplicateStream { key: String, change: StreamChange },
    GossipPush(MembershipTable),
    GossipReply(MembershipTable),
    DiffTask(DiffJob),
    CompactTask { key: String, epoch: u64 },
    ViewDeliver { sink: String, view: StreamView },
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::GetReq { .. } => "GetReq",
            Body::GetResp { .. } => "GetResp",
            Body::PutReq { .. } => "PutReq",
            Body::UpdateReq { .. } => "UpdateReq",
            Body::StreamReq { .. } => "StreamReq",
            Body::UnstreamReq { .. } => "UnstreamReq",
            Body::Ack { .. } => "Ack",
            Body::Replicate { .. } => "Replicate",
            Body::ReplicateStream { .. } => "ReplicateStream",
            Body::GossipPush(_) => "GossipPush",
            Body::GossipReply(_) => "GossipReply",
            Body::DiffTask(_) => "DiffTask",
            Body::CompactTask { .. } => "CompactTask",
            Body::ViewDeliver { .. } => "ViewDeliver",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// A client request arriving at its entry node.
    Client { op: OpId, request: ClientRequest },
    GossipTick { generation: u64 },
    RequestTimeout { op: OpId, attempt: usize },
    Message { from: usize, body: Body },
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Client { .. } => "ClientRequest",
            Payload::GossipTick { .. } => "GossipTick",
            Payload::RequestTimeout { .. } => "RequestTimeout",
            Payload::Message { body, .. } => body.kind(),
        }
    }

    /// Gossip traffic runs forever and does not count against quiescence.
    pub fn is_gossip(&self) -> bool {
        matches!(
            self,
            Payload::GossipTick { .. }
                | Payload::Message {
                    body: Body::GossipPush(_) | Body::GossipReply(_),
                    ..
                }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Node(usize),
    Sink(String),
}

#[derive(Debug, Clone)]
struct Event {
    time: SimTime,
    seq: u64,
    target: Target,
    payload: Payload,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

/// A client operation an entry node is still waiting on.
#[derive(Debug, Clone, PartialEq)]
pub struct Inflight {
    pub request: ClientRequest,
    pub preference: Vec<usize>,
    pub attempt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpStatus {
    Done,
    Unavailable,
    /// The entry node crashed before the operation resolved.
    Abandoned,
}

/// A write as applied by its coordinator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppliedWrite {
    pub key: String,
    pub stamp: VersionStamp,
    pub object: Object,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub(crate) id: NodeId,
    pub(crate) membership: MembershipTable,
    pub(crate) store: BTreeMap<String, ObjectRecord>,
    pub(crate) crashed: bool,
    pub(crate) write_counter: u64,
    pub(crate) inflight: BTreeMap<OpId, Inflight>,
    tick_generation: u64,
    ring_cache: Option<(Vec<NodeId>, Ring)>,
}

impl NodeState {
    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn membership(&self) -> &MembershipTable {
        &self.membership
    }

    pub fn store(&self) -> &BTreeMap<String, ObjectRecord> {
        &self.store
    }

    pub fn is_crashed(&self) -> bool {
        self.crashed
    }

    pub fn write_counter(&self) -> u64 {
        self.write_counter
    }

    /// The ring over this node's currently alive members.
    pub fn ring(&mut self, vnodes_per_node: u32) -> &Ring {
        let alive = self.membership.alive_members();
        let stale = self.ring_cache.as_ref().is_none_or(|(members, _)| *members != alive);
        if stale {
            // self is always alive, so the member list is never empty
            let ring = Ring::build(alive.clone(), vnodes_per_node).expect("non-empty alive set");
            self.ring_cache = Some((alive, ring));
        }
        &self.ring_cache.as_ref().unwrap().1
    }
}

pub struct World {
    pub(crate) config: SimConfig,
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Reverse<Event>>,
    /// Queued events that are not gossip traffic.
    active: usize,
    dispatched: u64,
    pub(crate) nodes: Vec<NodeState>,
    index: BTreeMap<NodeId, usize>,
    pub(crate) rng: ChaCha8Rng,
    sinks: BTreeMap<String, Vec<StreamView>>,
    records: Vec<Record>,
    next_op: OpId,
    ops: BTreeMap<OpId, Option<OpStatus>>,
    pub(crate) history: Vec<AppliedWrite>,
}

impl World {
    /// Builds a cluster of `config.nodes` alive nodes, named `n1..nN`, each
    /// knowing the full member list, with their first gossip tick at time 0.
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let ids: Vec<NodeId> = (0..config.nodes).map(SimConfig::node_id).collect();
        let nodes = ids
            .iter()
            .map(|id| NodeState {
                id: id.clone(),
                membership: MembershipTable::bootstrap(id.clone(), &ids),
                store: BTreeMap::new(),
                crashed: false,
                write_counter: 0,
                inflight: BTreeMap::new(),
                tick_generation: 0,
                ring_cache: None,
            })
            .collect();
        let index = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let mut world = World {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            now: 0,
            next_seq: 0,
            queue: BinaryHeap::new(),
            active: 0,
            dispatched: 0,
            nodes,
            index,
            sinks: BTreeMap::new(),
            records: Vec::new(),
            next_op: 0,
            ops: BTreeMap::new(),
            history: Vec::new(),
        };
        for i in 0..world.nodes.len() {
            world.schedule(0, Target::Node(i), Payload::GossipTick { generation: 0 });
        }
        Ok(world)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, id: &NodeId) -> Option<&NodeState> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn node_index(&self, id: &NodeId) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn sink(&self, sink: &str) -> &[StreamView] {
        self.sinks.get(sink).map_or(&[], Vec::as_slice)
    }

    pub fn sinks(&self) -> &BTreeMap<String, Vec<StreamView>> {
        &self.sinks
    }

    pub fn write_history(&self) -> &[AppliedWrite] {
        &self.history
    }

    /// Drains the records emitted since the last call.
    pub fn take_records(&mut self) -> Vec<Record> {
        std::mem::take(&mut self.records)
    }

    pub(crate) fn emit(&mut self, record: Record) {
        self.records.push(record);
    }

    pub fn op_status(&self, op: OpId) -> Option<OpStatus> {
        self.ops.get(&op).copied().flatten()
    }

    pub(crate) fn resolve(&mut self, op: OpId, status: OpStatus) {
        self.ops.insert(op, Some(status));
    }

    /// Hands a client request to `entry`; it is processed at the current time.
    pub fn submit(&mut self, entry: &NodeId, request: ClientRequest) -> Result<OpId> {
        let idx = self.node_index(entry)?;
        if let ClientRequest::Stream(req) = &request {
            if req.fields.is_empty() {
                return Err(Error::InvalidArgument("stream field set is empty".into()));
            }
        }
        let op = self.next_op;
        self.next_op += 1;
        self.ops.insert(op, None);
        self.schedule(0, Target::Node(idx), Payload::Client { op, request });
        Ok(op)
    }

    pub fn schedule(&mut self, delay: SimTime, target: Target, payload: Payload) {
        if !payload.is_gossip() {
            self.active += 1;
        }
        let event = Event {
            time: self.now + delay,
            seq: self.next_seq,
            target,
            payload,
        };
        self.next_seq += 1;
        self.queue.push(Reverse(event));
    }

    /// Sends a message between nodes. Local messages are delivered at the
    /// current time; remote ones may be dropped and otherwise arrive after a
    /// latency drawn uniformly from `[min_latency, max_latency]`.
    pub fn send(&mut self, from: usize, to: usize, body: Body) {
        let payload = Payload::Message { from, body };
        if from == to {
            self.schedule(0, Target::Node(to), payload);
            return;
        }
        if self.config.drop_rate > 0.0 && self.rng.gen_bool(self.config.drop_rate) {
            return;
        }
        let latency = if self.config.min_latency == self.config.max_latency {
            self.config.min_latency
        } else {
            self.rng.gen_range(self.config.min_latency..=self.config.max_latency)
        };
        self.schedule(latency, Target::Node(to), payload);
    }

    /// True when only gossip traffic remains queued.
    pub fn is_quiescent(&self) -> bool {
        self.active == 0
    }

    pub fn next_event_time(&self) -> Option<SimTime> {
        self.queue.peek().map(|Reverse(e)| e.time)
    }

    /// Dispatches the next event. Returns false when the queue is empty.
    pub fn step(&mut self) -> bool {
        let Some(Reverse(event)) = self.queue.pop() else {
            return false;
        };
        self.now = event.time;
        self.dispatched += 1;
        if !event.payload.is_gossip() {
            self.active -= 1;
        }
        if self.config.trace {
            let target = match &event.target {
                Target::Node(i) => self.nodes[*i].id.to_string(),
                Target::Sink(s) => format!("sink:{s}"),
            };
            self.emit(Record::Event {
                t: event.time,
                seq: event.seq,
                target,
                kind: event.payload.kind(),
            });
        }
        match event.target {
            Target::Sink(sink) => {
                if let Payload::Message {
                    body: Body::ViewDeliver { view, .. },
                    ..
                } = event.payload
                {
                    self.deliver_view(sink, view);
                }
            }
            Target::Node(idx) => {
                if !self.nodes[idx].crashed {
                    self.dispatch(idx, event.payload);
                }
            }
        }
        true
    }

    /// Runs every event up to `now + duration`, then sets the clock there.
    pub fn advance(&mut self, duration: SimTime) {
        let until = self.now + duration;
        while self.next_event_time().is_some_and(|t| t <= until) {
            self.step();
        }
        self.now = until;
    }

    /// Steps until only gossip traffic remains. Returns the number of events
    /// dispatched.
    pub fn run_until_quiescent(&mut self, max_events: u64) -> Result<u64> {
        let mut steps = 0;
        while !self.is_quiescent() {
            if steps >= max_events {
                return Err(Error::NonQuiescent(max_events));
            }
            self.step();
            steps += 1;
        }
        Ok(steps)
    }

    /// Steps until `op` resolves.
    pub fn run_until_resolved(&mut self, op: OpId, max_events: u64) -> Result<OpStatus> {
        let mut steps = 0;
        loop {
            if let Some(status) = self.op_status(op) {
                return Ok(status);
            }
            if steps >= max_events || !self.step() {
                return Err(Error::NonQuiescent(max_events));
            }
            steps += 1;
        }
    }

    /// Pauses a node. Its state is kept; events addressed to it are dropped.
    pub fn crash(&mut self, id: &NodeId) -> Result<()> {
        let idx = self.node_index(id)?;
        let node = &mut self.nodes[idx];
        if node.crashed {
            return Ok(());
        }
        node.crashed = true;
        let abandoned: Vec<OpId> = std::mem::take(&mut node.inflight).into_keys().collect();
        for op in abandoned {
            self.resolve(op, OpStatus::Abandoned);
        }
        Ok(())
    }

    /// Resumes a paused node: heartbeats continue from the old counter and
    /// failure-detection timers restart.
    pub fn recover(&mut self, id: &NodeId) -> Result<()> {
        let idx = self.node_index(id)?;
        let now = self.now;
        let node = &mut self.nodes[idx];
        if !node.crashed {
            return Ok(());
        }
        node.crashed = false;
        node.membership.refresh(now);
        node.tick_generation += 1;
        let generation = node.tick_generation;
        self.schedule(0, Target::Node(idx), Payload::GossipTick { generation });
        Ok(())
    }

    pub(crate) fn deliver_view(&mut self, sink: String, view: StreamView) {
        self.emit(Record::View {
            t: self.now,
            sink: sink.clone(),
            view: view.clone(),
        });
        self.sinks.entry(sink).or_default().push(view);
    }

    /// Preference list for `key` as seen by node `idx`, as node indices.
    pub(crate) fn preference_list(&mut self, idx: usize, key: &str) -> Vec<usize> {
        let n = self.config.effective_replication();
        let vnodes = self.config.vnodes_per_node;
        let list = self.nodes[idx].ring(vnodes).preference_list(key, n);
        list.iter().filter_map(|id| self.index.get(id).copied()).collect()
    }

    fn dispatch(&mut self, idx: usize, payload: Payload) {
        match payload {
            Payload::GossipTick { generation } => self.on_gossip_tick(idx, generation),
            Payload::Client { op, request } => self.on_client_request(idx, op, request),
            Payload::RequestTimeout { op, attempt } => self.on_request_timeout(idx, op, attempt),
            Payload::Message { from, body } => match body {
                Body::GossipPush(table) => {
                    let now = self.now;
                    self.nodes[idx].membership.merge(&table, now);
                    let reply = self.nodes[idx].membership.clone();
                    self.send(idx, from, Body::GossipReply(reply));
                }
                Body::GossipReply(table) => {
                    let now = self.now;
                    self.nodes[idx].membership.merge(&table, now);
                }
                other => self.on_message(idx, from, other),
            },
        }
    }

    fn on_gossip_tick(&mut self, idx: usize, generation: u64) {
        if generation != self.nodes[idx].tick_generation {
            return;
        }
        let now = self.now;
        let (fanout, suspect_after, interval) = (
            self.config.fanout,
            self.config.suspect_after,
            self.config.gossip_interval,
        );
        let node = &mut self.nodes[idx];
        node.membership.tick_heartbeat(now);
        node.membership.detect_failures(now, suspect_after);
        let peers = node.membership.select_gossip_peers(fanout, &mut self.rng);
        let snapshot = node.membership.clone();
        let targets: Vec<usize> = peers.iter().filter_map(|p| self.index.get(p).copied()).collect();
        for to in targets {
            self.send(idx, to, Body::GossipPush(snapshot.clone()));
        }
        self.schedule(interval, Target::Node(idx), Payload::GossipTick { generation });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(nodes: usize) -> World {
        World::new(SimConfig {
            nodes,
            vnodes_per_node: 8,
            ..SimConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn config_validation() {
        let bad = [
            SimConfig { nodes: 0, ..SimConfig::default() },
            SimConfig { min_latency: 4, max_latency: 3, ..SimConfig::default() },
            SimConfig { drop_rate: 1.5, ..SimConfig::default() },
            SimConfig { gossip_interval: 0, ..SimConfig::default() },
        ];
        for config in bad {
            assert!(World::new(config).is_err());
        }
        let one = SimConfig { nodes: 1, ..SimConfig::default() };
        assert_eq!(one.effective_replication(), 1);
    }

    #[test]
    fn empty_queue_is_quiescent() {
        let mut w = world(1);
        // only gossip ticks are queued
        assert!(w.is_quiescent());
        assert_eq!(w.run_until_quiescent(10).unwrap(), 0);
    }

    #[test]
    fn same_time_events_run_in_scheduling_order() {
        let mut w = world(1);
        w.config.trace = true;
        w.take_records();
        w.schedule(0, Target::Node(0), Payload::RequestTimeout { op: 1, attempt: 0 });
        w.schedule(0, Target::Node(0), Payload::RequestTimeout { op: 2, attempt: 0 });
        w.advance(0);
        let seqs: Vec<u64> = w
            .take_records()
            .into_iter()
            .filter_map(|r| match r {
                Record::Event { seq, kind: "RequestTimeout", .. } => Some(seq),
                _ => None,
            })
            .collect();
        assert_eq!(seqs.len(), 2);
        assert!(seqs[0] < seqs[1]);
    }

    #[test]
    fn fixed_latency_delivery() {
        let mut w = World::new(SimConfig {
            nodes: 2,
            min_latency: 1,
            max_latency: 1,
            trace: true,
            ..SimConfig::default()
        })
        .unwrap();
        w.advance(0);
        w.take_records();
        w.send(0, 1, Body::Ack { op: 99 });
        w.advance(1);
        let acks: Vec<SimTime> = w
            .take_records()
            .into_iter()
            .filter_map(|r| match r {
                Record::Event { t, kind: "Ack", .. } => Some(t),
                _ => None,
            })
            .collect();
        assert_eq!(acks, vec![1]);
    }

    #[test]
    fn full_drop_rate_loses_everything() {
        let mut w = World::new(SimConfig {
            nodes: 2,
            drop_rate: 1.0,
            ..SimConfig::default()
        })
        .unwrap();
        w.send(0, 1, Body::Ack { op: 1 });
        assert!(w.is_quiescent());
        // local delivery is never dropped
        w.send(0, 0, Body::Ack { op: 1 });
        assert!(!w.is_quiescent());
    }

    #[test]
    fn crashed_node_discards_events() {
        let mut w = world(2);
        w.crash(&"n2".into()).unwrap();
        w.crash(&"n2".into()).unwrap();
        let before = w.nodes[1].membership.clone();
        w.advance(5);
        assert_eq!(w.nodes[1].membership, before);
        assert!(w.nodes[0].membership.heartbeat(&"n1".into()).unwrap() >= 5);
    }

    #[test]
    fn recover_resumes_heartbeat_from_old_counter() {
        let mut w = world(2);
        w.advance(3);
        let hb = w.nodes[1].membership.heartbeat(&"n2".into()).unwrap();
        w.crash(&"n2".into()).unwrap();
        w.advance(20);
        assert_eq!(w.nodes[1].membership.heartbeat(&"n2".into()), Some(hb));
        w.recover(&"n2".into()).unwrap();
        w.advance(0);
        assert_eq!(w.nodes[1].membership.heartbeat(&"n2".into()), Some(hb + 1));
        // exactly one tick chain after a second recover call
        w.recover(&"n2".into()).unwrap();
        w.advance(4);
        assert_eq!(w.nodes[1].membership.heartbeat(&"n2".into()), Some(hb + 5));
    }

    #[test]
    fn unknown_node_rejected() {
        let mut w = world(2);
        assert!(matches!(w.crash(&"n9".into()), Err(Error::UnknownNode(_))));
        assert!(w.submit(&"zz".into(), ClientRequest::Get { key: "k".into() }).is_err());
    }
}
