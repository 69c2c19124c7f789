//! Canonical JSON output.
//!
//! Everything the crate writes to disk or over the wire goes through these
//! helpers so that object keys come out sorted and byte-identical across runs.

use serde::Serialize;

/// Serializes `value` with object keys sorted at every level.
pub fn to_canonical_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    // serde_json::Value maps are BTreeMaps, so a round trip through Value sorts keys.
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&v)
}

pub fn to_canonical_pretty<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string_pretty(&v)
}
