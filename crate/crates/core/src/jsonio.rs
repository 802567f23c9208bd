//! Small helpers for hand-walking JSON documents so that errors can name
//! the offending field.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{KepError, Result};

/// Version tag written into every file this crate produces.
pub const FORMAT_VERSION: u64 = 1;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| KepError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| KepError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| KepError::parse("<document>", e.to_string()))
}

pub(crate) fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| KepError::parse(format!("{path}{key}"), "missing"))
}

pub(crate) fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| KepError::parse(path, "expected an object"))
}

pub(crate) fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| KepError::parse(path, "expected an array"))
}

pub(crate) fn as_uint(v: &Value, path: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| KepError::parse(path, "expected a non-negative integer"))
}

pub(crate) fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| KepError::parse(path, "expected a number"))
}

pub(crate) fn as_bool(v: &Value, path: &str) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| KepError::parse(path, "expected a boolean"))
}

pub(crate) fn check_format(obj: &Map<String, Value>) -> Result<()> {
    let f = as_uint(field(obj, "format", "")?, "format")?;
    if f != FORMAT_VERSION {
        return Err(KepError::parse(
            "format",
            format!("unsupported version {f}, expected {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

