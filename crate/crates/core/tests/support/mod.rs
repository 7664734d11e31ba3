//! Test-only oracles: a sequential single-map reference for live-query
//! emission, random scenario generation, and brute-force field diffing.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use livequery_sim::scenario::Command;
use livequery_sim::value::{FieldValue, Object};
use rand::seq::SliceRandom;
use rand::Rng;

/// Structural value equality, independent of canonical byte encoding.
pub fn same_value(a: &FieldValue, b: &FieldValue) -> bool {
    match (a, b) {
        (FieldValue::Null, FieldValue::Null) => true,
        (FieldValue::Bool(x), FieldValue::Bool(y)) => x == y,
        (FieldValue::Number(x), FieldValue::Number(y)) => x == y,
        (FieldValue::Text(x), FieldValue::Text(y)) => x == y,
        _ => false,
    }
}

/// Per-field comparison of two objects.
pub fn brute_force_diff(old: &Object, new: &Object) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (k, v) in old {
        match new.get(k) {
            Some(w) if same_value(v, w) => {}
            _ => {
                out.insert(k.clone());
            }
        }
    }
    for k in new.keys() {
        if !old.contains_key(k) {
            out.insert(k.clone());
        }
    }
    out
}

/// One emitted view as the reference sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct RefView {
    pub seq: u64,
    pub updated: Vec<String>,
    pub view: Vec<(String, String)>,
    pub stamp: u64,
}

pub fn render(v: &FieldValue) -> String {
    match v {
        FieldValue::Null => "null".into(),
        FieldValue::Bool(b) => b.to_string(),
        FieldValue::Number(n) => format!("n:{n}"),
        FieldValue::Text(s) => format!("s:{s}"),
    }
}

pub fn render_object(o: &Object) -> Vec<(String, String)> {
    o.iter().map(|(k, v)| (k.clone(), render(v))).collect()
}

#[derive(Default, Clone)]
struct RefKey {
    object: Option<Object>,
    pending: Vec<(Object, u64)>,
    pending_since: u64,
    streams: Vec<(String, BTreeSet<String>)>,
}

/// Sequential single-node reference. With `coalesce`, sparse updates are
/// held and folded in `compaction_delay` after the first one, the way a
/// deferred-merge store compacts them.
pub struct Reference {
    coalesce: bool,
    compaction_delay: u64,
    now: u64,
    counter: u64,
    keys: BTreeMap<String, RefKey>,
    stream_key: BTreeMap<String, String>,
    seqs: BTreeMap<String, u64>,
    pub views: BTreeMap<String, Vec<RefView>>,
}

impl Reference {
    pub fn new(coalesce: bool, compaction_delay: u64) -> Self {
        Reference {
            coalesce,
            compaction_delay,
            now: 0,
            counter: 0,
            keys: BTreeMap::new(),
            stream_key: BTreeMap::new(),
            seqs: BTreeMap::new(),
            views: BTreeMap::new(),
        }
    }

    pub fn run(mut self, commands: &[Command]) -> BTreeMap<String, Vec<RefView>> {
        for c in commands {
            self.apply(c);
        }
        self.finish();
        self.views
    }

    /// What a reader would see for `key`.
    pub fn visible(&self, key: &str) -> Option<Object> {
        let k = self.keys.get(key)?;
        if k.pending.is_empty() {
            return k.object.clone();
        }
        let mut o = k.object.clone().unwrap_or_default();
        for (delta, _) in &k.pending {
            for (f, v) in delta {
                o.insert(f.clone(), v.clone());
            }
        }
        Some(o)
    }

    pub fn has_pending(&self, key: &str) -> bool {
        self.keys.get(key).is_some_and(|k| !k.pending.is_empty())
    }

    pub fn apply(&mut self, c: &Command) {
        match c {
            Command::Put { key, object } => {
                self.counter += 1;
                if self.has_pending(key) {
                    self.compact(key);
                }
                let k = self.keys.entry(key.clone()).or_default();
                let old = k.object.clone().unwrap_or_default();
                let changed = brute_force_diff(&old, object);
                k.object = Some(object.clone());
                let stamp = self.counter;
                self.emit(key, &changed, stamp);
            }
            Command::Update { key, sparse } => {
                self.counter += 1;
                let stamp = self.counter;
                let coalesce = self.coalesce;
                let now = self.now;
                let k = self.keys.entry(key.clone()).or_default();
                if coalesce {
                    if k.pending.is_empty() {
                        k.pending_since = now;
                    }
                    k.pending.push((sparse.clone(), stamp));
                    return;
                }
                let changed = apply_sparse(k, sparse);
                self.emit(key, &changed, stamp);
            }
            Command::Stream {
                key,
                fields,
                stream_id,
                ..
            } => {
                let k = self.keys.entry(key.clone()).or_default();
                if k.streams.iter().any(|(id, _)| id == stream_id) {
                    return;
                }
                k.streams.push((stream_id.clone(), fields.clone()));
                self.stream_key.entry(stream_id.clone()).or_insert_with(|| key.clone());
            }
            Command::Unstream { stream_id } => {
                if let Some(key) = self.stream_key.get(stream_id) {
                    if let Some(k) = self.keys.get_mut(key) {
                        k.streams.retain(|(id, _)| id != stream_id);
                    }
                }
            }
            Command::Tick(n) => {
                self.now += n;
                let due: Vec<String> = self
                    .keys
                    .iter()
                    .filter(|(_, k)| !k.pending.is_empty() && k.pending_since + self.compaction_delay <= self.now)
                    .map(|(key, _)| key.clone())
                    .collect();
                for key in due {
                    self.compact(&key);
                }
            }
            Command::Settle => self.finish(),
            Command::Get { .. } | Command::Crash(_) | Command::Recover(_) => {}
        }
    }

    pub fn finish(&mut self) {
        let due: Vec<String> = self
            .keys
            .iter()
            .filter(|(_, k)| !k.pending.is_empty())
            .map(|(key, _)| key.clone())
            .collect();
        for key in due {
            self.compact(&key);
        }
    }

    fn compact(&mut self, key: &str) {
        let k = self.keys.get_mut(key).unwrap();
        let pending = std::mem::take(&mut k.pending);
        let stamp = pending.last().map(|(_, s)| *s).unwrap();
        let mut changed = BTreeSet::new();
        for (delta, _) in &pending {
            changed.extend(apply_sparse(k, delta));
        }
        self.emit(key, &changed, stamp);
    }

    fn emit(&mut self, key: &str, changed: &BTreeSet<String>, stamp: u64) {
        let k = &self.keys[key];
        let object = k.object.clone().unwrap_or_default();
        for (id, fields) in &k.streams {
            let updated: Vec<String> = fields.iter().filter(|f| changed.contains(*f)).cloned().collect();
            if updated.is_empty() {
                continue;
            }
            let seq = self.seqs.entry(id.clone()).or_insert(0);
            *seq += 1;
            let view: Object = object
                .iter()
                .filter(|(f, _)| fields.contains(*f))
                .map(|(f, v)| (f.clone(), v.clone()))
                .collect();
            self.views.entry(id.clone()).or_default().push(RefView {
                seq: *seq,
                updated,
                view: render_object(&view),
                stamp,
            });
        }
    }
}

fn apply_sparse(k: &mut RefKey, sparse: &Object) -> BTreeSet<String> {
    let object = k.object.get_or_insert_with(Object::new);
    let mut changed = BTreeSet::new();
    for (f, v) in sparse {
        let same = object.get(f).is_some_and(|old| same_value(old, v));
        if !same {
            changed.insert(f.clone());
            object.insert(f.clone(), v.clone());
        }
    }
    changed
}

pub const FIELD_POOL: [&str; 6] = ["a", "b", "c", "d", "name", "score"];

pub fn random_value<R: Rng>(rng: &mut R) -> FieldValue {
    match rng.gen_range(0..6) {
        0 => FieldValue::Null,
        1 => FieldValue::Bool(rng.gen()),
        2 => FieldValue::Number(rng.gen_range(0..4) as f64),
        3 => FieldValue::Number(rng.gen_range(0..4) as f64 + 0.5),
        _ => FieldValue::text(["x", "y", "null", "z#1"][rng.gen_range(0..4)]),
    }
}

pub fn random_object<R: Rng>(rng: &mut R, min: usize, max: usize) -> Object {
    let n = rng.gen_range(min..=max);
    let mut fields: Vec<&str> = FIELD_POOL.to_vec();
    fields.shuffle(rng);
    fields[..n].iter().map(|f| (f.to_string(), random_value(rng))).collect()
}

/// A random script of at most `max_commands` commands over at most five keys.
pub fn random_script<R: Rng>(rng: &mut R, max_commands: usize, with_ticks: bool) -> Vec<Command> {
    let keys = ["k1", "k2", "k3", "k4", "k5"];
    let key_count = rng.gen_range(1..=keys.len());
    let len = rng.gen_range(1..=max_commands);
    let mut streams: Vec<String> = Vec::new();
    let mut next_stream = 0;
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let key = keys[rng.gen_range(0..key_count)].to_string();
        let roll = rng.gen_range(0..100);
        let cmd = match roll {
            0..=24 => Command::Put {
                key,
                object: random_object(rng, 0, 4),
            },
            25..=59 => Command::Update {
                key,
                sparse: random_object(rng, 1, 3),
            },
            60..=74 => {
                next_stream += 1;
                let id = format!("s{next_stream}");
                streams.push(id.clone());
                let n = rng.gen_range(1..=3);
                let mut fields: Vec<&str> = FIELD_POOL.to_vec();
                fields.shuffle(rng);
                Command::Stream {
                    key,
                    fields: fields[..n].iter().map(|f| f.to_string()).collect(),
                    stream_id: id,
                    sink_id: ["sinkA", "sinkB"][rng.gen_range(0..2)].to_string(),
                }
            }
            75..=81 if !streams.is_empty() => Command::Unstream {
                stream_id: streams[rng.gen_range(0..streams.len())].clone(),
            },
            82..=87 => Command::Get { key },
            88..=99 if with_ticks => Command::Tick(rng.gen_range(1..=4)),
            _ => continue,
        };
        out.push(cmd);
    }
    out
}

/// Renders commands back to script text.
pub fn to_script(commands: &[Command]) -> String {
    use livequery_sim::value::object_to_json;
    let mut s = String::new();
    for c in commands {
        let line = match c {
            Command::Put { key, object } => format!("put {key} {}", object_to_json(object)),
            Command::Update { key, sparse } => format!("update {key} {}", object_to_json(sparse)),
            Command::Get { key } => format!("get {key}"),
            Command::Stream {
                key,
                fields,
                stream_id,
                sink_id,
            } => format!(
                "stream {key} [{}] as {stream_id} to {sink_id}",
                fields.iter().cloned().collect::<Vec<_>>().join(",")
            ),
            Command::Unstream { stream_id } => format!("unstream {stream_id}"),
            Command::Tick(n) => format!("tick {n}"),
            Command::Settle => "settle".into(),
            Command::Crash(n) => format!("crash {n}"),
            Command::Recover(n) => format!("recover {n}"),
        };
        s.push_str(&line);
        s.push('\n');
    }
    s
}
