//! Scenario scripts: one command per line.
//!
//! ```text
//! # comment
//! put user1 {"name":"ada","age":36}
//! update user1 {"age":37}
//! get user1
//! stream user1 [name,age] as s1 to sinkA
//! unstream s1
//! tick 5
//! settle
//! crash n2
//! recover n2
//! ```

use std::collections::BTreeSet;

use crate::error::ParseError;
use crate::value::{object_from_json, validate_field_name, Object};
use crate::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Put { key: String, object: Object },
    Update { key: String, sparse: Object },
    Get { key: String },
    Stream {
        key: String,
        fields: BTreeSet<String>,
        stream_id: String,
        sink_id: String,
    },
    Unstream { stream_id: String },
    Tick(SimTime),
    Settle,
    Crash(String),
    Recover(String),
}

impl Command {
    /// Whether the command is a client request routed through a node.
    pub fn is_client_op(&self) -> bool {
        matches!(
            self,
            Command::Put { .. }
                | Command::Update { .. }
                | Command::Get { .. }
                | Command::Stream { .. }
                | Command::Unstream { .. }
        )
    }
}

pub fn parse_scenario(text: &str) -> Result<Vec<Command>, ParseError> {
    let mut commands = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        commands.push(parse_line(line, i + 1)?);
    }
    Ok(commands)
}

/// Cuts the line at the first `#` that is not inside a JSON string.
fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
        } else if c == '"' {
            in_string = true;
        } else if c == '#' {
            return &line[..i];
        }
    }
    line
}

struct Cursor<'a> {
    line: &'a str,
    number: usize,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn error(&self, at: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.number,
            column: self.line[..at.min(self.line.len())].chars().count() + 1,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) {
        let rest = &self.line[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    /// Next whitespace-delimited token and its start offset.
    fn token(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        self.skip_space();
        let start = self.pos;
        let rest = self.rest();
        let len = rest.find(char::is_whitespace).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error(start, format!("expected {what}")));
        }
        self.pos += len;
        Ok((start, &rest[..len]))
    }

    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        let (at, tok) = self.token(&format!("`{word}`"))?;
        if tok != word {
            return Err(self.error(at, format!("expected `{word}`, found `{tok}`")));
        }
        Ok(())
    }

    fn end(&mut self) -> Result<(), ParseError> {
        self.skip_space();
        if self.pos < self.line.len() {
            return Err(self.error(self.pos, format!("unexpected trailing input `{}`", self.rest().trim_end())));
        }
        Ok(())
    }

    fn object(&mut self) -> Result<Object, ParseError> {
        self.skip_space();
        let start = self.pos;
        let text = self.rest().trim_end();
        if text.is_empty() {
            return Err(self.error(start, "expected a JSON object"));
        }
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
            let offset = text
                .lines()
                .next()
                .map(|l| l.char_indices().nth(e.column().saturating_sub(1)).map_or(l.len(), |(i, _)| i))
                .unwrap_or(0);
            self.error(start + offset, format!("malformed JSON: {e}"))
        })?;
        let object = object_from_json(&value).map_err(|e| {
            let message = e.to_string();
            let message = message.strip_prefix("invalid argument: ").unwrap_or(&message).to_string();
            self.error(start, message)
        })?;
        self.pos = self.line.len();
        Ok(object)
    }

    fn field_list(&mut self) -> Result<BTreeSet<String>, ParseError> {
        self.skip_space();
        let start = self.pos;
        let rest = self.rest();
        if !rest.starts_with('[') {
            return Err(self.error(start, "expected a field list like [a,b]"));
        }
        let close = rest
            .find(']')
            .ok_or_else(|| self.error(start, "unterminated field list"))?;
        let inner = &rest[1..close];
        let mut fields = BTreeSet::new();
        if !inner.trim().is_empty() {
            for name in inner.split(',') {
                let name = name.trim();
                validate_field_name(name).map_err(|_| self.error(start, format!("invalid field name `{name}` in list")))?;
                fields.insert(name.to_string());
            }
        }
        if fields.is_empty() {
            return Err(self.error(start, "stream field list is empty"));
        }
        self.pos += close + 1;
        Ok(fields)
    }
}

fn parse_line(line: &str, number: usize) -> Result<Command, ParseError> {
    let mut cur = Cursor { line, number, pos: 0 };
    let (verb_at, verb) = cur.token("a command")?;
    let command = match verb {
        "put" | "update" => {
            let (_, key) = cur.token("a key")?;
            let object = cur.object()?;
            if verb == "put" {
                Command::Put {
                    key: key.to_string(),
                    object,
                }
            } else {
                if object.is_empty() {
                    return Err(cur.error(line.len(), "update needs at least one field"));
                }
                Command::Update {
                    key: key.to_string(),
                    sparse: object,
                }
            }
        }
        "get" => Command::Get {
            key: cur.token("a key")?.1.to_string(),
        },
        "stream" => {
            let (_, key) = cur.token("a key")?;
            let fields = cur.field_list()?;
            cur.keyword("as")?;
            let (_, stream_id) = cur.token("a stream id")?;
            cur.keyword("to")?;
            let (_, sink_id) = cur.token("a sink id")?;
            Command::Stream {
                key: key.to_string(),
                fields,
                stream_id: stream_id.to_string(),
                sink_id: sink_id.to_string(),
            }
        }
        "unstream" => Command::Unstream {
            stream_id: cur.token("a stream id")?.1.to_string(),
        },
        "tick" => {
            let (at, n) = cur.token("a duration")?;
            let n = n
                .parse::<SimTime>()
                .map_err(|_| cur.error(at, format!("invalid duration `{n}`")))?;
            Command::Tick(n)
        }
        "settle" => Command::Settle,
        "crash" => Command::Crash(cur.token("a node id")?.1.to_string()),
        "recover" => Command::Recover(cur.token("a node id")?.1.to_string()),
        other => return Err(cur.error(verb_at, format!("unknown verb `{other}`"))),
    };
    cur.end()?;
    Ok(command)
}
