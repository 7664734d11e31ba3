//! Executes scenario scripts against a [`World`] and writes JSONL.
//!
//! Client commands are issued one at a time: each waits until its entry node
//! has a response (or gives up) before the next command starts. Asynchronous
//! work such as replication, diffs and compactions keeps running in the
//! background and only completes on `tick`, `settle` or while a later
//! command is in flight.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::error::Error;
use crate::output::Record;
use crate::runtime::{ClientRequest, OpStatus, SimConfig, World};
use crate::scenario::{parse_scenario, Command};
use crate::store::StreamRequest;
use crate::NodeId;

pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_UNAVAILABLE: i32 = 3;

pub struct Runner {
    world: World,
    stream_keys: BTreeMap<String, String>,
    degraded: bool,
    aborted: bool,
    max_events: u64,
}

impl Runner {
    pub fn new(config: SimConfig) -> crate::Result<Self> {
        Ok(Runner {
            world: World::new(config)?,
            stream_keys: BTreeMap::new(),
            degraded: false,
            aborted: false,
            max_events: DEFAULT_MAX_EVENTS,
        })
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn into_world(self) -> World {
        self.world
    }

    /// Runs every command, then settles, and returns the exit code.
    pub fn run<W: Write>(&mut self, commands: &[Command], out: &mut W) -> io::Result<i32> {
        for (index, command) in commands.iter().enumerate() {
            self.execute(index, command, out)?;
            if self.aborted {
                break;
            }
        }
        self.finish(out)
    }

    /// Executes the command at position `index` of the script.
    pub fn execute<W: Write>(&mut self, index: usize, command: &Command, out: &mut W) -> io::Result<()> {
        if self.aborted {
            return Ok(());
        }
        match command {
            Command::Tick(n) => self.world.advance(*n),
            Command::Settle => self.settle(),
            Command::Crash(id) | Command::Recover(id) => {
                let node = NodeId::new(id.as_str());
                let result = if matches!(command, Command::Crash(_)) {
                    self.world.crash(&node)
                } else {
                    self.world.recover(&node)
                };
                if let Err(e) = result {
                    let t = self.world.now();
                    self.world.emit(Record::error(Some(t), "unknown-node", e.to_string()));
                }
            }
            _ => self.client_op(index, command),
        }
        self.flush(out)
    }

    /// Settles the world and reports the exit code.
    pub fn finish<W: Write>(&mut self, out: &mut W) -> io::Result<i32> {
        if !self.aborted {
            self.settle();
        }
        self.flush(out)?;
        Ok(if self.aborted || self.degraded {
            EXIT_UNAVAILABLE
        } else {
            EXIT_OK
        })
    }

    fn settle(&mut self) {
        if let Err(e) = self.world.run_until_quiescent(self.max_events) {
            self.abort(e);
        }
    }

    fn abort(&mut self, e: Error) {
        let t = self.world.now();
        self.world.emit(Record::error(Some(t), "non-quiescent", e.to_string()));
        self.aborted = true;
    }

    fn client_op(&mut self, index: usize, command: &Command) {
        let Some(request) = self.request_for(command) else {
            return;
        };
        let Some(entry) = self.entry_node(index) else {
            let t = self.world.now();
            self.world.emit(Record::Error {
                t: Some(t),
                error: "unavailable",
                op: Some(request.op_name()),
                key: Some(request.key().to_string()),
                line: None,
                column: None,
                message: "every node is crashed".into(),
            });
            self.degraded = true;
            return;
        };
        let op = match self.world.submit(&entry, request) {
            Ok(op) => op,
            Err(e) => {
                let t = self.world.now();
                self.world.emit(Record::error(Some(t), "invalid-argument", e.to_string()));
                return;
            }
        };
        match self.world.run_until_resolved(op, self.max_events) {
            Ok(OpStatus::Done) => {}
            Ok(OpStatus::Unavailable | OpStatus::Abandoned) => self.degraded = true,
            Err(e) => self.abort(e),
        }
    }

    fn request_for(&mut self, command: &Command) -> Option<ClientRequest> {
        let request = match command {
            Command::Put { key, object } => ClientRequest::Put {
                key: key.clone(),
                object: object.clone(),
            },
            Command::Update { key, sparse } => ClientRequest::Update {
                key: key.clone(),
                sparse: sparse.clone(),
            },
            Command::Get { key } => ClientRequest::Get { key: key.clone() },
            Command::Stream {
                key,
                fields,
                stream_id,
                sink_id,
            } => {
                self.stream_keys
                    .entry(stream_id.clone())
                    .or_insert_with(|| key.clone());
                ClientRequest::Stream(StreamRequest {
                    stream_id: stream_id.clone(),
                    key: key.clone(),
                    fields: fields.clone(),
                    sink_id: sink_id.clone(),
                })
            }
            Command::Unstream { stream_id } => match self.stream_keys.get(stream_id) {
                Some(key) => ClientRequest::Unstream {
                    key: key.clone(),
                    stream_id: stream_id.clone(),
                },
                None => {
                    let t = self.world.now();
                    self.world.emit(Record::Error {
                        t: Some(t),
                        error: "unknown-stream",
                        op: Some("unstream"),
                        key: None,
                        line: None,
                        column: None,
                        message: format!("stream `{stream_id}` was never registered"),
                    });
                    return None;
                }
            },
            _ => return None,
        };
        Some(request)
    }

    /// Node `index mod nodes`, or the next node after it that is running.
    fn entry_node(&self, index: usize) -> Option<NodeId> {
        let nodes = self.world.nodes();
        (0..nodes.len())
            .map(|offset| &nodes[(index + offset) % nodes.len()])
            .find(|n| !n.is_crashed())
            .map(|n| n.id().clone())
    }

    fn flush<W: Write>(&mut self, out: &mut W) -> io::Result<()> {
        for record in self.world.take_records() {
            writeln!(out, "{}", record.to_json())?;
        }
        Ok(())
    }
}

pub fn run_scenario<W: Write>(config: SimConfig, commands: &[Command], out: &mut W) -> io::Result<i32> {
    match Runner::new(config) {
        Ok(mut runner) => runner.run(commands, out),
        Err(e) => {
            writeln!(out, "{}", Record::error(None, "invalid-config", e.to_string()).to_json())?;
            Ok(EXIT_PARSE)
        }
    }
}

/// Parses and runs a script. A parse error is reported as a single error
/// record with exit code 2.
pub fn run_script<W: Write>(config: SimConfig, text: &str, out: &mut W) -> io::Result<i32> {
    match parse_scenario(text) {
        Ok(commands) => run_scenario(config, &commands, out),
        Err(e) => {
            let record = Record::Error {
                t: None,
                error: "parse",
                op: None,
                key: None,
                line: Some(e.line),
                column: Some(e.column),
                message: e.message,
            };
            writeln!(out, "{}", record.to_json())?;
            Ok(EXIT_PARSE)
        }
    }
}
