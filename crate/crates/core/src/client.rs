//! Request routing and coordination.
//!
//! A client request enters at some node, which computes the key's preference
//! list from its own ring and forwards the request to the first member. If no
//! answer arrives within the request timeout, the entry node tries the next
//! member, and reports the key unavailable once the list is exhausted.
//!
//! The node that handles a write is its coordinator: it stamps the write,
//! applies it locally, acknowledges, replicates the resulting object to the
//! rest of its preference list and is the only node that emits views.
//! Replicas install newer versions silently (last writer wins).

use std::collections::BTreeSet;

use crate::merkle::FieldTree;
use crate::output::Record;
use crate::runtime::{AppliedWrite, Body, ClientRequest, Inflight, OpId, OpStatus, Payload, StreamChange, Target, World};
use crate::store::{DiffJob, ObjectRecord, StreamRequest, StreamView, VersionStamp, WriteOutcome};
use crate::value::Object;

enum Write {
    Put(Object),
    Update(Object),
}

impl World {
    pub(crate) fn on_client_request(&mut self, entry: usize, op: OpId, request: ClientRequest) {
        let preference = self.preference_list(entry, request.key());
        self.nodes[entry].inflight.insert(
            op,
            Inflight {
                request,
                preference,
                attempt: 0,
            },
        );
        self.forward(entry, op);
    }

    fn forward(&mut self, entry: usize, op: OpId) {
        let Some(inflight) = self.nodes[entry].inflight.get(&op) else {
            return;
        };
        let attempt = inflight.attempt;
        let target = inflight.preference[attempt];
        let body = inflight.request.to_body(op);
        self.send(entry, target, body);
        let timeout = self.config.request_timeout();
        self.schedule(timeout, Target::Node(entry), Payload::RequestTimeout { op, attempt });
    }

    pub(crate) fn on_request_timeout(&mut self, entry: usize, op: OpId, attempt: usize) {
        let Some(inflight) = self.nodes[entry].inflight.get_mut(&op) else {
            return;
        };
        if inflight.attempt != attempt {
            return;
        }
        inflight.attempt += 1;
        if inflight.attempt < inflight.preference.len() {
            self.forward(entry, op);
            return;
        }
        let inflight = self.nodes[entry].inflight.remove(&op).expect("inflight op");
        let key = inflight.request.key().to_string();
        self.emit(Record::Error {
            t: Some(self.now()),
            error: "unavailable",
            op: Some(inflight.request.op_name()),
            key: Some(key.clone()),
            line: None,
            column: None,
            message: format!("no replica of `{key}` answered"),
        });
        self.resolve(op, OpStatus::Unavailable);
    }

    fn on_response(&mut self, entry: usize, op: OpId) {
        if self.nodes[entry].inflight.remove(&op).is_some() {
            self.resolve(op, OpStatus::Done);
        }
    }

    pub(crate) fn on_message(&mut self, idx: usize, from: usize, body: Body) {
        match body {
            Body::GetReq { op, key } => self.coordinate_get(idx, from, op, key),
            Body::PutReq { op, key, object } => self.coordinate_write(idx, from, op, key, Write::Put(object)),
            Body::UpdateReq { op, key, sparse } => self.coordinate_write(idx, from, op, key, Write::Update(sparse)),
            Body::StreamReq { op, request } => self.coordinate_stream(idx, from, op, request),
            Body::UnstreamReq { op, key, stream_id } => self.coordinate_unstream(idx, from, op, key, stream_id),
            Body::GetResp { op } | Body::Ack { op } => self.on_response(idx, op),
            Body::Replicate {
                key,
                object,
                stamp,
                seqs,
            } => {
                let strategy = self.config.strategy;
                let node = &mut self.nodes[idx];
                node.write_counter = node.write_counter.max(stamp.counter);
                node.store
                    .entry(key.clone())
                    .or_insert_with(|| ObjectRecord::new(key))
                    .apply_replica(object, stamp, &seqs, strategy);
            }
            Body::ReplicateStream { key, change } => {
                let record = self.nodes[idx]
                    .store
                    .entry(key.clone())
                    .or_insert_with(|| ObjectRecord::new(key));
                match change {
                    // already registered is fine on a replica
                    StreamChange::Register(request) => {
                        let _ = record.register_stream(request);
                    }
                    StreamChange::Deregister(stream_id) => {
                        record.deregister_stream(&stream_id);
                    }
                    StreamChange::Progress(seqs) => record.merge_stream_seqs(&seqs),
                }
            }
            Body::DiffTask(job) => self.run_diff(idx, job),
            Body::CompactTask { key, epoch } => self.run_compaction(idx, key, epoch),
            Body::ViewDeliver { sink, view } => self.deliver_view(sink, view),
            Body::GossipPush(_) | Body::GossipReply(_) => unreachable!("handled by the runtime"),
        }
    }

    fn coordinate_get(&mut self, idx: usize, from: usize, op: OpId, key: String) {
        let object = self.nodes[idx].store.get(&key).and_then(ObjectRecord::read);
        self.emit(Record::Get {
            t: self.now(),
            key,
            coordinator: self.nodes[idx].id.clone(),
            object,
        });
        self.send(idx, from, Body::GetResp { op });
    }

    fn coordinate_write(&mut self, idx: usize, from: usize, op: OpId, key: String, write: Write) {
        let strategy = self.config.strategy;
        let now = self.now();
        let node = &mut self.nodes[idx];
        let record = node
            .store
            .entry(key.clone())
            .or_insert_with(|| ObjectRecord::new(key.clone()));
        // Lamport-style: never stamp below a version this node has seen
        let floor = record.stamp().map_or(0, |s| s.counter);
        node.write_counter = node.write_counter.max(floor) + 1;
        let stamp = VersionStamp::new(node.write_counter, node.id.clone());
        let (op_name, result) = match write {
            Write::Put(object) => ("put", record.apply_put(object, stamp.clone(), strategy)),
            Write::Update(sparse) => ("update", record.apply_update(sparse, stamp.clone(), strategy)),
        };
        let outcome = match result {
            Ok(outcome) => outcome,
            Err(e) => {
                self.emit(Record::Error {
                    t: Some(now),
                    error: "invalid-argument",
                    op: Some(op_name),
                    key: Some(key),
                    line: None,
                    column: None,
                    message: e.to_string(),
                });
                self.send(idx, from, Body::Ack { op });
                return;
            }
        };

        let WriteOutcome {
            emissions,
            diff,
            schedule_compaction,
        } = outcome;
        let mut views = Vec::new();
        for emission in &emissions {
            views.extend(record.compute_views(&emission.changed, &emission.object, &emission.stamp));
        }
        let replicated = record.read().unwrap_or_default();
        let seqs = record.stream_seqs().clone();
        let coordinator = node.id.clone();

        self.emit(Record::Ack {
            t: now,
            op: op_name,
            key: key.clone(),
            coordinator,
            stamp: Some(stamp.clone()),
            stream: None,
        });
        self.history.push(AppliedWrite {
            key: key.clone(),
            stamp: stamp.clone(),
            object: replicated.clone(),
        });
        self.send(idx, from, Body::Ack { op });
        for replica in self.replicas(idx, &key) {
            self.send(
                idx,
                replica,
                Body::Replicate {
                    key: key.clone(),
                    object: replicated.clone(),
                    stamp: stamp.clone(),
                    seqs: seqs.clone(),
                },
            );
        }
        self.push_views(idx, views);
        if let Some(job) = diff {
            let delay = self.config.diff_delay;
            self.schedule(delay, Target::Node(idx), Payload::Message { from: idx, body: Body::DiffTask(job) });
        }
        if let Some(epoch) = schedule_compaction {
            let delay = self.config.compaction_delay;
            self.schedule(
                delay,
                Target::Node(idx),
                Payload::Message {
                    from: idx,
                    body: Body::CompactTask { key, epoch },
                },
            );
        }
    }

    fn coordinate_stream(&mut self, idx: usize, from: usize, op: OpId, request: StreamRequest) {
        let now = self.now();
        let key = request.key.clone();
        let stream_id = request.stream_id.clone();
        let node = &mut self.nodes[idx];
        let result = node
            .store
            .entry(key.clone())
            .or_insert_with(|| ObjectRecord::new(key.clone()))
            .register_stream(request.clone());
        match result {
            Ok(()) => {
                let coordinator = node.id.clone();
                self.emit(Record::Ack {
                    t: now,
                    op: "stream",
                    key: key.clone(),
                    coordinator,
                    stamp: None,
                    stream: Some(stream_id),
                });
                for replica in self.replicas(idx, &key) {
                    self.send(
                        idx,
                        replica,
                        Body::ReplicateStream {
                            key: key.clone(),
                            change: StreamChange::Register(request.clone()),
                        },
                    );
                }
            }
            Err(e) => {
                let error = match e {
                    crate::Error::DuplicateStream(_) => "duplicate-stream",
                    _ => "invalid-argument",
                };
                self.emit(Record::Error {
                    t: Some(now),
                    error,
                    op: Some("stream"),
                    key: Some(key),
                    line: None,
                    column: None,
                    message: e.to_string(),
                });
            }
        }
        self.send(idx, from, Body::Ack { op });
    }

    fn coordinate_unstream(&mut self, idx: usize, from: usize, op: OpId, key: String, stream_id: String) {
        let now = self.now();
        let node = &mut self.nodes[idx];
        // removal never creates a record
        if let Some(record) = node.store.get_mut(&key) {
            record.deregister_stream(&stream_id);
        }
        let coordinator = node.id.clone();
        self.emit(Record::Ack {
            t: now,
            op: "unstream",
            key: key.clone(),
            coordinator,
            stamp: None,
            stream: Some(stream_id.clone()),
        });
        for replica in self.replicas(idx, &key) {
            self.send(
                idx,
                replica,
                Body::ReplicateStream {
                    key: key.clone(),
                    change: StreamChange::Deregister(stream_id.clone()),
                },
            );
        }
        self.send(idx, from, Body::Ack { op });
    }

    fn run_diff(&mut self, idx: usize, job: DiffJob) {
        let changed: BTreeSet<String> = match (FieldTree::build(&job.old), FieldTree::build(&job.new)) {
            (Ok(old), Ok(new)) => old.diff(&new),
            // names are validated on the way in
            _ => return,
        };
        let Some(record) = self.nodes[idx].store.get_mut(&job.key) else {
            return;
        };
        let views = record.compute_views_for(&job.streams, &changed, &job.new, &job.stamp);
        if !views.is_empty() {
            self.push_views(idx, views);
            self.share_progress(idx, &job.key);
        }
    }

    fn run_compaction(&mut self, idx: usize, key: String, epoch: u64) {
        let Some(record) = self.nodes[idx].store.get_mut(&key) else {
            return;
        };
        if record.compaction_epoch() != epoch {
            return;
        }
        let Some(emission) = record.flush_pending() else {
            return;
        };
        let views = record.compute_views(&emission.changed, &emission.object, &emission.stamp);
        if !views.is_empty() {
            self.push_views(idx, views);
            self.share_progress(idx, &key);
        }
    }

    fn push_views(&mut self, idx: usize, views: Vec<(String, StreamView)>) {
        for (sink, view) in views {
            self.schedule(
                0,
                Target::Sink(sink.clone()),
                Payload::Message {
                    from: idx,
                    body: Body::ViewDeliver { sink, view },
                },
            );
        }
    }

    /// Sends the key's stream counters to the other replicas after views
    /// were emitted later than the write itself was replicated.
    fn share_progress(&mut self, idx: usize, key: &str) {
        let Some(record) = self.nodes[idx].store.get(key) else {
            return;
        };
        let seqs = record.stream_seqs().clone();
        for r in self.replicas(idx, key) {
            self.send(
                idx,
                r,
                Body::ReplicateStream {
                    key: key.to_string(),
                    change: StreamChange::Progress(seqs.clone()),
                },
            );
        }
    }

    /// Preference-list members other than `idx` itself.
    fn replicas(&mut self, idx: usize, key: &str) -> Vec<usize> {
        self.preference_list(idx, key)
            .into_iter()
            .filter(|&r| r != idx)
            .collect()
    }
}
