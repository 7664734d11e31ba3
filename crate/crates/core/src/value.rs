//! Scalar field values, their canonical byte encoding and JSON rendering.
//!
//! Objects are flat maps from field name to [`FieldValue`]. Equality of
//! values is defined by their canonical bytes, which are also what the
//! field Merkle tree hashes.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A flat object: field name to scalar value, ordered by name.
pub type Object = BTreeMap<String, FieldValue>;

/// Largest magnitude rendered as a plain integer.
const MAX_PLAIN_INTEGER: f64 = 9_007_199_254_740_992.0; // 2^53

/// Prefix byte for text values, so the string "null" never collides with null.
const TEXT_TAG: u8 = 0x01;

#[derive(Debug, Clone)]
pub enum FieldValue {
    Null,
    Bool(bool),
    /// Always finite; use [`FieldValue::number`] to construct from untrusted input.
    Number(f64),
    Text(String),
}

impl FieldValue {
    pub fn number(v: f64) -> Result<Self> {
        if v.is_finite() {
            Ok(FieldValue::Number(v))
        } else {
            Err(Error::InvalidArgument(format!("non-finite number {v}")))
        }
    }

    pub fn text(s: impl Into<String>) -> Self {
        FieldValue::Text(s.into())
    }

    /// Deterministic byte serialization used for hashing and equality.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        match self {
            FieldValue::Null => b"null".to_vec(),
            FieldValue::Bool(true) => b"true".to_vec(),
            FieldValue::Bool(false) => b"false".to_vec(),
            FieldValue::Number(v) => format_number(*v).into_bytes(),
            FieldValue::Text(s) => {
                let mut out = Vec::with_capacity(s.len() + 1);
                out.push(TEXT_TAG);
                out.extend_from_slice(s.as_bytes());
                out
            }
        }
    }

    /// Converts a parsed JSON scalar. Arrays and objects are rejected.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::Null => Ok(FieldValue::Null),
            serde_json::Value::Bool(b) => Ok(FieldValue::Bool(*b)),
            serde_json::Value::Number(n) => {
                let v = n
                    .as_f64()
                    .ok_or_else(|| Error::InvalidArgument(format!("number {n} out of range")))?;
                FieldValue::number(v)
            }
            serde_json::Value::String(s) => Ok(FieldValue::Text(s.clone())),
            serde_json::Value::Array(_) | serde_json::Value::Object(_) => Err(
                Error::InvalidArgument("nested values unsupported".to_string()),
            ),
        }
    }

    pub fn write_json(&self, out: &mut String) {
        match self {
            FieldValue::Null => out.push_str("null"),
            FieldValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            FieldValue::Number(v) => out.push_str(&format_number(*v)),
            FieldValue::Text(s) => write_json_string(s, out),
        }
    }
}

impl PartialEq for FieldValue {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_bytes() == other.canonical_bytes()
    }
}

impl Eq for FieldValue {}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_json(&mut s);
        f.write_str(&s)
    }
}

impl From<bool> for FieldValue {
    fn from(b: bool) -> Self {
        FieldValue::Bool(b)
    }
}

impl From<&str> for FieldValue {
    fn from(s: &str) -> Self {
        FieldValue::Text(s.to_string())
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Number(v as f64)
    }
}

/// Shortest round-trip decimal; integral values up to 2^53 print as plain integers.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() <= MAX_PLAIN_INTEGER {
        // -0.0 collapses to "0"
        format!("{}", v as i64)
    } else {
        ryu::Buffer::new().format_finite(v).to_string()
    }
}

/// Field names must be non-empty and free of control characters.
pub fn validate_field_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::InvalidArgument("empty field name".to_string()));
    }
    if name.chars().any(char::is_control) {
        return Err(Error::InvalidArgument(format!(
            "field name {name:?} contains control characters"
        )));
    }
    Ok(())
}

pub fn write_json_string(s: &str, out: &mut String) {
    // serializing a &str cannot fail
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

pub fn write_object_json(object: &Object, out: &mut String) {
    out.push('{');
    for (i, (name, value)) in object.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_json_string(name, out);
        out.push(':');
        value.write_json(out);
    }
    out.push('}');
}

pub fn object_to_json(object: &Object) -> String {
    let mut out = String::new();
    write_object_json(object, &mut out);
    out
}

/// Converts a parsed JSON value into a flat object.
pub fn object_from_json(value: &serde_json::Value) -> Result<Object> {
    let map = value
        .as_object()
        .ok_or_else(|| Error::InvalidArgument("expected a JSON object".to_string()))?;
    let mut object = Object::new();
    for (name, v) in map {
        validate_field_name(name)?;
        let value = FieldValue::from_json(v)
            .map_err(|e| Error::InvalidArgument(format!("field {name:?}: {e}")))?;
        object.insert(name.clone(), value);
    }
    Ok(object)
}

/// Restricts `object` to the given field names; absent fields are omitted.
pub fn project<'a>(object: &Object, fields: impl IntoIterator<Item = &'a String>) -> Object {
    fields
        .into_iter()
        .filter_map(|f| object.get(f).map(|v| (f.clone(), v.clone())))
        .collect()
}
