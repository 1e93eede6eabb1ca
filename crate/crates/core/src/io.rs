//! Line-delimited JSON files. A first line of the form `{"meta": {...}}`
//! carries provenance and is skipped by readers.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

fn is_meta(v: &Value) -> bool {
    matches!(v, Value::Object(m) if m.len() == 1 && m.contains_key("meta"))
}

/// Reads every record, returning the meta payload if present.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(Option<Value>, Vec<T>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut meta = None;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            path: path.into(),
            line: n + 1,
            message,
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if is_meta(&value) {
            if let Value::Object(mut m) = value {
                meta = m.remove("meta");
            }
            continue;
        }
        out.push(serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?);
    }
    Ok((meta, out))
}

pub fn write_jsonl<T: Serialize>(path: &Path, meta: Option<&Value>, records: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_records(&mut w, meta, records).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_records<W: Write, T: Serialize>(
    w: &mut W,
    meta: Option<&Value>,
    records: &[T],
) -> std::io::Result<()> {
    if let Some(meta) = meta {
        serde_json::to_writer(&mut *w, &serde_json::json!({ "meta": meta }))?;
        w.write_all(b"\n")?;
    }
    for r in records {
        serde_json::to_writer(&mut *w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
