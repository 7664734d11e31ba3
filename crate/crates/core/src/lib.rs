//! Deterministic simulation of a Dynamo-style key-value store with
//! field-level live queries.
//!
//! Nodes place keys on an MD5 consistent-hash ring, learn about each other
//! through heartbeat gossip and replicate writes to a key's preference list.
//! Clients can register `stream(key, fields)` requests; whenever a write
//! changes one of the selected fields, the key's coordinator pushes a
//! projected view of those fields to the stream's sink.

pub mod client;
pub mod error;
pub mod hash;
pub mod membership;
pub mod merkle;
pub mod output;
pub mod ring;
pub mod runner;
pub mod runtime;
pub mod scenario;
pub mod store;
pub mod value;

pub use error::{Error, ParseError, Result};
pub use ring::NodeId;
pub use value::{FieldValue, Object};

/// Simulated time, in integer units.
pub type SimTime = u64;
