//! Line-delimited JSON reading and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses one JSON value, reporting the JSON path of the first failure.
/// Unknown labels surface as [`Error::UnknownLabel`] wrapped in
/// [`Error::AtPath`]; everything else as [`Error::Schema`].
pub fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        let message = inner.to_string();
        match label_error(&message) {
            Some(source) => Error::AtPath {
                path,
                source: Box::new(source),
            },
            None => Error::schema(path, message),
        }
    })?;
    de.end().map_err(|e| Error::schema(".", e))?;
    Ok(value)
}

fn label_error(message: &str) -> Option<Error> {
    for kind in ["entity type", "relation type"] {
        let prefix = format!("unknown {kind} label `");
        if let Some(rest) = message.strip_prefix(&prefix) {
            let label = rest.split('`').next().unwrap_or_default();
            return Some(Error::UnknownLabel {
                kind,
                label: label.to_string(),
            });
        }
    }
    None
}

/// Reads a line-delimited file, applying `parse` to every non-blank line.
/// Errors carry the file name and 1-based line number.
pub fn read_lines<T>(path: &Path, mut parse: impl FnMut(&[u8]) -> Result<T>) -> Result<Vec<T>> {
    let content = fs::read(path).map_err(|e| Error::io(path, e))?;
    content
        .split(|&b| b == b'\n')
        .enumerate()
        .filter(|(_, line)| !line.iter().all(u8::is_ascii_whitespace))
        .map(|(i, line)| parse(line).map_err(|e| e.at_line(path, i + 1)))
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_lines(path, parse_json)
}

/// One compact JSON object per line, trailing newline included.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Pretty JSON with struct field order preserved and a trailing newline.
pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
