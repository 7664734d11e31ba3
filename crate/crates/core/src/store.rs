//! Per-node versioned object records, change detection and stream views.
//!
//! Three change-detection strategies are supported:
//!
//! * [`Strategy::MergeOnWrite`]: sparse updates are merged into the stored
//!   object during the write, and the changed fields are known at once.
//! * [`Strategy::DeferredMerge`]: sparse updates are appended to a pending
//!   list and folded in later by [`ObjectRecord::compact`]; views are
//!   emitted at compaction.
//! * [`Strategy::VersionDiff`]: every write stores a full new version next to
//!   the old one, and the caller diffs the two with field Merkle trees after
//!   the write has completed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ring::NodeId;
use crate::value::{project, Object};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    MergeOnWrite,
    DeferredMerge,
    VersionDiff,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::MergeOnWrite, Strategy::DeferredMerge, Strategy::VersionDiff];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::MergeOnWrite => "merge",
            Strategy::DeferredMerge => "deferred",
            Strategy::VersionDiff => "versiondiff",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merge" => Ok(Strategy::MergeOnWrite),
            "deferred" => Ok(Strategy::DeferredMerge),
            "versiondiff" => Ok(Strategy::VersionDiff),
            other => Err(Error::InvalidArgument(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Write version, ordered by `(counter, coordinator)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VersionStamp {
    pub counter: u64,
    pub coordinator: NodeId,
}

impl VersionStamp {
    pub fn new(counter: u64, coordinator: impl Into<NodeId>) -> Self {
        VersionStamp {
            counter,
            coordinator: coordinator.into(),
        }
    }
}

impl fmt::Display for VersionStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.counter, self.coordinator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRequest {
    pub stream_id: String,
    pub key: String,
    pub fields: BTreeSet<String>,
    pub sink_id: String,
}

impl StreamRequest {
    pub fn new<I, S>(stream_id: &str, key: &str, fields: I, sink_id: &str) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let fields: BTreeSet<String> = fields.into_iter().map(Into::into).collect();
        if fields.is_empty() {
            return Err(Error::InvalidArgument("stream field set is empty".into()));
        }
        Ok(StreamRequest {
            stream_id: stream_id.to_string(),
            key: key.to_string(),
            fields,
            sink_id: sink_id.to_string(),
        })
    }
}

/// A projected update pushed to a stream's sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamView {
    pub stream_id: String,
    pub key: String,
    pub seq: u64,
    pub updated: BTreeSet<String>,
    pub view: Object,
    pub stamp: VersionStamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingDelta {
    pub sparse: Object,
    pub stamp: VersionStamp,
}

/// A set of changed fields together with the version it describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emission {
    pub changed: BTreeSet<String>,
    pub object: Object,
    pub stamp: VersionStamp,
}

/// Work for an asynchronous version diff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffJob {
    pub key: String,
    pub old: Object,
    pub new: Object,
    pub stamp: VersionStamp,
    /// Streams registered when the write was applied.
    pub streams: Vec<StreamRequest>,
}

/// What the caller must do after a write was applied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WriteOutcome {
    /// Change sets known now, in the order they happened.
    pub emissions: Vec<Emission>,
    /// Set under [`Strategy::VersionDiff`].
    pub diff: Option<DiffJob>,
    /// Set under [`Strategy::DeferredMerge`] when this write opened a new
    /// pending batch; carries the compaction epoch to check against.
    pub schedule_compaction: Option<u64>,
}

/// Overlays `sparse` on `base`. Fields assigned their current value are not
/// reported as changed.
pub fn merge_sparse(base: Option<&Object>, sparse: &Object) -> (Object, BTreeSet<String>) {
    let mut merged = base.cloned().unwrap_or_default();
    let mut changed = BTreeSet::new();
    for (name, value) in sparse {
        if merged.get(name) != Some(value) {
            changed.insert(name.clone());
            merged.insert(name.clone(), value.clone());
        }
    }
    (merged, changed)
}

/// Fields added, removed or changed between two full versions.
pub fn full_changes(old: Option<&Object>, new: &Object) -> BTreeSet<String> {
    let empty = Object::new();
    let old = old.unwrap_or(&empty);
    let mut changed: BTreeSet<String> = new
        .iter()
        .filter(|(k, v)| old.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    changed.extend(old.keys().filter(|k| !new.contains_key(*k)).cloned());
    changed
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectRecord {
    key: String,
    current: Option<Object>,
    previous: Option<Object>,
    pending: Vec<PendingDelta>,
    stamp: Option<VersionStamp>,
    streams: Vec<StreamRequest>,
    stream_seq: BTreeMap<String, u64>,
    compaction_epoch: u64,
}

impl ObjectRecord {
    pub fn new(key: impl Into<String>) -> Self {
        ObjectRecord {
            key: key.into(),
            current: None,
            previous: None,
            pending: Vec::new(),
            stamp: None,
            streams: Vec::new(),
            stream_seq: BTreeMap::new(),
            compaction_epoch: 0,
        }
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn current(&self) -> Option<&Object> {
        self.current.as_ref()
    }

    pub fn previous(&self) -> Option<&Object> {
        self.previous.as_ref()
    }

    pub fn pending(&self) -> &[PendingDelta] {
        &self.pending
    }

    pub fn stamp(&self) -> Option<&VersionStamp> {
        self.stamp.as_ref()
    }

    pub fn streams(&self) -> &[StreamRequest] {
        &self.streams
    }

    pub fn stream_seqs(&self) -> &BTreeMap<String, u64> {
        &self.stream_seq
    }

    pub fn compaction_epoch(&self) -> u64 {
        self.compaction_epoch
    }

    /// The object as a reader sees it: pending deltas overlaid in order.
    pub fn read(&self) -> Option<Object> {
        if self.pending.is_empty() {
            return self.current.clone();
        }
        let mut object = self.current.clone().unwrap_or_default();
        for delta in &self.pending {
            object.extend(delta.sparse.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        Some(object)
    }

    fn check_fresh(&self, stamp: &VersionStamp) -> Result<()> {
        match &self.stamp {
            Some(stored) if stamp <= stored => Err(Error::StaleWrite {
                incoming: stamp.to_string(),
                stored: stored.to_string(),
            }),
            _ => Ok(()),
        }
    }

    pub fn apply_put(&mut self, object: Object, stamp: VersionStamp, strategy: Strategy) -> Result<WriteOutcome> {
        self.check_fresh(&stamp)?;
        let mut outcome = WriteOutcome::default();
        match strategy {
            Strategy::VersionDiff => {
                let old = self.current.take();
                outcome.diff = Some(DiffJob {
                    key: self.key.clone(),
                    old: old.clone().unwrap_or_default(),
                    new: object.clone(),
                    stamp: stamp.clone(),
                    streams: self.streams.clone(),
                });
                self.previous = old;
                self.current = Some(object);
            }
            Strategy::MergeOnWrite | Strategy::DeferredMerge => {
                // a full put supersedes any pending deltas, so fold them first
                if let Some(flushed) = self.flush_pending() {
                    outcome.emissions.push(flushed);
                }
                let changed = full_changes(self.current.as_ref(), &object);
                outcome.emissions.push(Emission {
                    changed,
                    object: object.clone(),
                    stamp: stamp.clone(),
                });
                self.current = Some(object);
            }
        }
        self.stamp = Some(stamp);
        Ok(outcome)
    }

    pub fn apply_update(&mut self, sparse: Object, stamp: VersionStamp, strategy: Strategy) -> Result<WriteOutcome> {
        if sparse.is_empty() {
            return Err(Error::InvalidArgument("update carries no fields".into()));
        }
        self.check_fresh(&stamp)?;
        match strategy {
            Strategy::MergeOnWrite => {
                let (merged, changed) = merge_sparse(self.current.as_ref(), &sparse);
                self.current = Some(merged.clone());
                self.stamp = Some(stamp.clone());
                Ok(WriteOutcome {
                    emissions: vec![Emission {
                        changed,
                        object: merged,
                        stamp,
                    }],
                    ..WriteOutcome::default()
                })
            }
            Strategy::DeferredMerge => {
                let opens_batch = self.pending.is_empty();
                self.pending.push(PendingDelta {
                    sparse,
                    stamp: stamp.clone(),
                });
                self.stamp = Some(stamp);
                Ok(WriteOutcome {
                    schedule_compaction: opens_batch.then_some(self.compaction_epoch),
                    ..WriteOutcome::default()
                })
            }
            Strategy::VersionDiff => {
                let (merged, _) = merge_sparse(self.current.as_ref(), &sparse);
                self.apply_put(merged, stamp, strategy)
            }
        }
    }

    /// Folds pending deltas into the current object. Returns the union of
    /// per-delta changes, each measured against the evolving base.
    pub fn compact(&mut self) -> BTreeSet<String> {
        self.compaction_epoch += 1;
        let mut changed = BTreeSet::new();
        for delta in std::mem::take(&mut self.pending) {
            let (merged, step) = merge_sparse(self.current.as_ref(), &delta.sparse);
            self.current = Some(merged);
            changed.extend(step);
        }
        changed
    }

    /// Compacts and describes the result, or `None` when nothing was pending.
    pub fn flush_pending(&mut self) -> Option<Emission> {
        if self.pending.is_empty() {
            return None;
        }
        let stamp = self.pending.last().map(|d| d.stamp.clone())?;
        let changed = self.compact();
        Some(Emission {
            changed,
            object: self.current.clone().unwrap_or_default(),
            stamp,
        })
    }

    /// Installs a replicated version if it is newer than what is stored.
    pub fn apply_replica(
        &mut self,
        object: Object,
        stamp: VersionStamp,
        seqs: &BTreeMap<String, u64>,
        strategy: Strategy,
    ) -> bool {
        self.merge_stream_seqs(seqs);
        if self.check_fresh(&stamp).is_err() {
            return false;
        }
        if !self.pending.is_empty() {
            self.compaction_epoch += 1;
            self.pending.clear();
        }
        let old = self.current.replace(object);
        if strategy == Strategy::VersionDiff {
            self.previous = old;
        }
        self.stamp = Some(stamp);
        true
    }

    /// Pointwise max of per-stream sequence counters.
    pub fn merge_stream_seqs(&mut self, seqs: &BTreeMap<String, u64>) {
        for (id, seq) in seqs {
            let ours = self.stream_seq.entry(id.clone()).or_insert(0);
            *ours = (*ours).max(*seq);
        }
    }

    pub fn register_stream(&mut self, request: StreamRequest) -> Result<()> {
        if request.key != self.key {
            return Err(Error::InvalidArgument(format!(
                "stream for key `{}` registered on `{}`",
                request.key, self.key
            )));
        }
        if request.fields.is_empty() {
            return Err(Error::InvalidArgument("stream field set is empty".into()));
        }
        if self.streams.iter().any(|s| s.stream_id == request.stream_id) {
            return Err(Error::DuplicateStream(request.stream_id));
        }
        self.stream_seq.entry(request.stream_id.clone()).or_insert(0);
        self.streams.push(request);
        Ok(())
    }

    /// Removes a stream; returns whether it was registered.
    pub fn deregister_stream(&mut self, stream_id: &str) -> bool {
        let before = self.streams.len();
        self.streams.retain(|s| s.stream_id != stream_id);
        self.streams.len() != before
    }

    /// Views for the currently registered streams.
    pub fn compute_views(
        &mut self,
        changed: &BTreeSet<String>,
        object: &Object,
        stamp: &VersionStamp,
    ) -> Vec<(String, StreamView)> {
        let streams = self.streams.clone();
        self.compute_views_for(&streams, changed, object, stamp)
    }

    /// Views for an explicit set of stream requests, e.g. the streams that
    /// were registered when a diffed write was applied. Returns
    /// `(sink id, view)` pairs.
    pub fn compute_views_for(
        &mut self,
        streams: &[StreamRequest],
        changed: &BTreeSet<String>,
        object: &Object,
        stamp: &VersionStamp,
    ) -> Vec<(String, StreamView)> {
        let mut views = Vec::new();
        for request in streams {
            let updated: BTreeSet<String> = changed.intersection(&request.fields).cloned().collect();
            if updated.is_empty() {
                continue;
            }
            let seq = self.stream_seq.entry(request.stream_id.clone()).or_insert(0);
            *seq += 1;
            views.push((
                request.sink_id.clone(),
                StreamView {
                    stream_id: request.stream_id.clone(),
                    key: self.key.clone(),
                    seq: *seq,
                    updated,
                    view: project(object, &request.fields),
                    stamp: stamp.clone(),
                },
            ));
        }
        views
    }
}
