//! Precomputed mention-string embeddings.
//!
//! File layout: a header line `{"dimension": N}` followed by one
//! `{"key": "...", "vector": [...]}` object per line. Keys are matched after
//! [`normalize_mention`].

use std::borrow::Cow;
use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_mention;

use super::jsonl::{parse_json, read_lines};

/// What to do when a key is missing from the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FallbackMode {
    #[default]
    Error,
    /// Deterministic pseudo-embedding derived from the key.
    Hash,
}

impl FromStr for FallbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" => Ok(FallbackMode::Error),
            "hash" => Ok(FallbackMode::Hash),
            _ => Err(Error::Config(format!("unknown fallback mode `{s}`"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dimension: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    key: String,
    vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dimension: usize,
    pub entries: HashMap<String, Vec<f64>>,
    pub fallback: FallbackMode,
}

impl EmbeddingTable {
    /// An empty table that answers every lookup with a hash embedding.
    pub fn hashed(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            entries: HashMap::new(),
            fallback: FallbackMode::Hash,
        }
    }

    pub fn from_entries(
        dimension: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
        fallback: FallbackMode,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Embedding("dimension must be at least 1".into()));
        }
        let mut table = HashMap::new();
        for (key, vector) in entries {
            if vector.len() != dimension {
                return Err(Error::Embedding(format!(
                    "inconsistent dimension for `{key}`: expected {dimension}, got {}",
                    vector.len()
                )));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Embedding(format!("non-finite value for `{key}`")));
            }
            if table.insert(normalize_mention(&key), vector).is_some() {
                return Err(Error::Embedding(format!("duplicate key `{key}`")));
            }
        }
        Ok(EmbeddingTable {
            dimension,
            entries: table,
            fallback,
        })
    }

    pub fn lookup(&self, text: &str) -> Result<Cow<'_, [f64]>> {
        let key = normalize_mention(text);
        if let Some(v) = self.entries.get(&key) {
            return Ok(Cow::Borrowed(v));
        }
        match self.fallback {
            FallbackMode::Error => Err(Error::MissingEmbedding(key)),
            FallbackMode::Hash => Ok(Cow::Owned(hash_embedding(&key, self.dimension))),
        }
    }
}

/// Reads a table file; every line is validated, nothing is repaired.
pub fn load_embedding_table(path: &Path, fallback: FallbackMode) -> Result<EmbeddingTable> {
    let mut header: Option<usize> = None;
    let mut entries = Vec::new();
    read_lines(path, |line| {
        if header.is_none() {
            let h: Header = parse_json(line)?;
            header = Some(h.dimension);
        } else {
            let e: Entry = parse_json(line)?;
            entries.push((e.key, e.vector));
        }
        Ok(())
    })?;
    let dimension = header.ok_or_else(|| Error::Embedding(format!("{}: missing header", path.display())))?;
    EmbeddingTable::from_entries(dimension, entries, fallback)
}

/// FNV-1a over the UTF-8 bytes.
fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Values i.i.d. uniform in [-0.5, 0.5), drawn from a counter-based
/// generator keyed by the 64-bit hash of the normalized key.
pub fn hash_embedding(normalized_key: &str, dimension: usize) -> Vec<f64> {
    let seed = fnv1a64(normalized_key);
    (0..dimension as u64)
        .map(|i| {
            let bits = splitmix64(seed ^ splitmix64(i));
            (bits >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_table(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_consistent_table() {
        let f = write_table(
            "{\"dimension\":4}\n{\"key\":\"cnn\",\"vector\":[1,2,3,4]}\n{\"key\":\"Neural  Net\",\"vector\":[0,0,0,1]}\n",
        );
        let t = load_embedding_table(f.path(), FallbackMode::Error).unwrap();
        assert_eq!(t.dimension, 4);
        assert_eq!(t.lookup("neural net").unwrap().as_ref(), &[0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(t.lookup("rnn"), Err(Error::MissingEmbedding(_))));
    }

    #[test]
    fn inconsistent_dimension_rejected() {
        let f = write_table(
            "{\"dimension\":4}\n{\"key\":\"a\",\"vector\":[1,2,3,4]}\n{\"key\":\"b\",\"vector\":[1,2,3,4,5]}\n",
        );
        assert!(matches!(
            load_embedding_table(f.path(), FallbackMode::Error),
            Err(Error::Embedding(_))
        ));
    }

    #[test]
    fn malformed_entry_has_line() {
        let f = write_table("{\"dimension\":2}\n{\"key\":\"a\",\"vec\":[1,2]}\n");
        let err = load_embedding_table(f.path(), FallbackMode::Error).unwrap_err();
        assert!(matches!(err, Error::AtLine { line: 2, .. }), "{err}");
    }

    #[test]
    fn hash_fallback_is_deterministic_and_bounded() {
        let t = EmbeddingTable::hashed(16);
        let a = t.lookup("Hidden Markov model").unwrap().into_owned();
        let b = t.lookup("hidden markov   model").unwrap().into_owned();
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        assert!(a.iter().all(|v| (-0.5..0.5).contains(v)));
        assert_ne!(a, t.lookup("hidden markov models").unwrap().into_owned());
    }
}
