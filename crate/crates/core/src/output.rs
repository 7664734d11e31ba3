//! JSONL records emitted by a simulation run.
//!
//! Every record is a single-line JSON object with a `type` field of `ack`,
//! `get`, `view`, `error` or `event`. Numbers use the canonical formatting
//! from [`crate::value`], so output is byte-stable across runs.

use std::collections::BTreeSet;

use crate::ring::NodeId;
use crate::store::{StreamView, VersionStamp};
use crate::value::{write_json_string, write_object_json, Object};
use crate::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Ack {
        t: SimTime,
        op: &'static str,
        key: String,
        coordinator: NodeId,
        /// Present for writes.
        stamp: Option<VersionStamp>,
        /// Present for stream registration and removal.
        stream: Option<String>,
    },
    Get {
        t: SimTime,
        key: String,
        coordinator: NodeId,
        object: Option<Object>,
    },
    View {
        t: SimTime,
        sink: String,
        view: StreamView,
    },
    Error {
        t: Option<SimTime>,
        error: &'static str,
        op: Option<&'static str>,
        key: Option<String>,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    Event {
        t: SimTime,
        seq: u64,
        target: String,
        kind: &'static str,
    },
}

impl Record {
    pub fn kind(&self) -> &'static str {
        match self {
            Record::Ack { .. } => "ack",
            Record::Get { .. } => "get",
            Record::View { .. } => "view",
            Record::Error { .. } => "error",
            Record::Event { .. } => "event",
        }
    }

    pub fn error(t: Option<SimTime>, error: &'static str, message: impl Into<String>) -> Self {
        Record::Error {
            t,
            error,
            op: None,
            key: None,
            line: None,
            column: None,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut w = JsonWriter::new();
        w.str("type", self.kind());
        match self {
            Record::Ack {
                t,
                op,
                key,
                coordinator,
                stamp,
                stream,
            } => {
                w.str("op", op);
                w.str("key", key);
                if let Some(stream) = stream {
                    w.str("stream", stream);
                }
                if let Some(stamp) = stamp {
                    w.stamp("stamp", stamp);
                }
                w.str("coordinator", coordinator.as_str());
                w.num("t", *t);
            }
            Record::Get {
                t,
                key,
                coordinator,
                object,
            } => {
                w.str("key", key);
                w.raw("found", if object.is_some() { "true" } else { "false" });
                match object {
                    Some(object) => w.object("object", object),
                    None => w.raw("object", "null"),
                }
                w.str("coordinator", coordinator.as_str());
                w.num("t", *t);
            }
            Record::View { t, sink, view } => {
                w.str("stream", &view.stream_id);
                w.str("key", &view.key);
                w.num("seq", view.seq);
                w.names("updated", &view.updated);
                w.object("view", &view.view);
                w.stamp("stamp", &view.stamp);
                w.str("sink", sink);
                w.num("t", *t);
            }
            Record::Error {
                t,
                error,
                op,
                key,
                line,
                column,
                message,
            } => {
                w.str("error", error);
                if let Some(op) = op {
                    w.str("op", op);
                }
                if let Some(key) = key {
                    w.str("key", key);
                }
                if let Some(line) = line {
                    w.num("line", *line as u64);
                }
                if let Some(column) = column {
                    w.num("column", *column as u64);
                }
                w.str("message", message);
                if let Some(t) = t {
                    w.num("t", *t);
                }
            }
            Record::Event { t, seq, target, kind } => {
                w.num("t", *t);
                w.num("seq", *seq);
                w.str("target", target);
                w.str("kind", kind);
            }
        }
        w.finish()
    }
}

struct JsonWriter {
    buf: String,
    first: bool,
}

impl JsonWriter {
    fn new() -> Self {
        JsonWriter {
            buf: String::from("{"),
            first: true,
        }
    }

    fn key(&mut self, key: &str) {
        if !self.first {
            self.buf.push(',');
        }
        self.first = false;
        write_json_string(key, &mut self.buf);
        self.buf.push(':');
    }

    fn raw(&mut self, key: &str, raw: &str) {
        self.key(key);
        self.buf.push_str(raw);
    }

    fn str(&mut self, key: &str, value: &str) {
        self.key(key);
        write_json_string(value, &mut self.buf);
    }

    fn num(&mut self, key: &str, value: u64) {
        self.key(key);
        self.buf.push_str(&value.to_string());
    }

    fn object(&mut self, key: &str, object: &Object) {
        self.key(key);
        write_object_json(object, &mut self.buf);
    }

    fn names(&mut self, key: &str, names: &BTreeSet<String>) {
        self.key(key);
        self.buf.push('[');
        for (i, name) in names.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            write_json_string(name, &mut self.buf);
        }
        self.buf.push(']');
    }

    fn stamp(&mut self, key: &str, stamp: &VersionStamp) {
        self.key(key);
        self.buf.push_str(&format!("{{\"counter\":{},\"coordinator\":", stamp.counter));
        write_json_string(stamp.coordinator.as_str(), &mut self.buf);
        self.buf.push('}');
    }

    fn finish(mut self) -> String {
        self.buf.push('}');
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::FieldValue;

    #[test]
    fn view_record_layout() {
        let view = StreamView {
            stream_id: "s1".into(),
            key: "k".into(),
            seq: 1,
            updated: BTreeSet::from(["a".to_string()]),
            view: Object::from([("a".to_string(), FieldValue::Number(2.0))]),
            stamp: VersionStamp::new(3, "n1"),
        };
        let rec = Record::View {
            t: 4,
            sink: "x".into(),
            view,
        };
        assert_eq!(
            rec.to_json(),
            r#"{"type":"view","stream":"s1","key":"k","seq":1,"updated":["a"],"view":{"a":2},"stamp":{"counter":3,"coordinator":"n1"},"sink":"x","t":4}"#
        );
    }

    #[test]
    fn event_record_layout() {
        let rec = Record::Event {
            t: 2,
            seq: 9,
            target: "n3".into(),
            kind: "GossipTick",
        };
        assert_eq!(rec.to_json(), r#"{"type":"event","t":2,"seq":9,"target":"n3","kind":"GossipTick"}"#);
    }

    #[test]
    fn records_are_valid_json() {
        let recs = [
            Record::Get {
                t: 1,
                key: "k\"q".into(),
                coordinator: "n1".into(),
                object: None,
            },
            Record::error(Some(3), "unavailable", "no replica"),
            Record::Ack {
                t: 0,
                op: "stream",
                key: "k".into(),
                coordinator: "n2".into(),
                stamp: None,
                stream: Some("s".into()),
            },
        ];
        for rec in recs {
            let parsed: serde_json::Value = serde_json::from_str(&rec.to_json()).unwrap();
            assert_eq!(parsed["type"], rec.kind());
        }
    }
}
