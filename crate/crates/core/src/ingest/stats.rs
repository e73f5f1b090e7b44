use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_token;

use super::document::DocumentRecord;

/// Default IDF threshold above which a unigram counts as non-generic.
pub const DEFAULT_IDF_THRESHOLD: f64 = 2.0;

/// Document frequencies of normalized unigrams over a training corpus.
///
/// IDF uses the smoothed form `ln((1 + N) / (1 + df)) + 1`, which is at
/// least 1 for every term seen in the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub num_documents: u64,
    pub document_frequency: BTreeMap<String, u64>,
    pub idf_threshold: f64,
}

impl CorpusStats {
    pub fn new(idf_threshold: f64) -> Self {
        CorpusStats {
            num_documents: 0,
            document_frequency: BTreeMap::new(),
            idf_threshold,
        }
    }

    pub fn add_document(&mut self, doc: &DocumentRecord) {
        self.add_tokens(doc.tokens());
    }

    /// Counts one document given as a token stream.
    pub fn add_tokens<'a>(&mut self, tokens: impl IntoIterator<Item = &'a str>) {
        let terms: BTreeSet<String> = tokens
            .into_iter()
            .map(normalize_token)
            .filter(|t| !t.is_empty())
            .collect();
        for t in terms {
            *self.document_frequency.entry(t).or_insert(0) += 1;
        }
        self.num_documents += 1;
    }

    /// Associative merge of two partial folds.
    pub fn merge(mut self, other: CorpusStats) -> Self {
        self.num_documents += other.num_documents;
        for (t, df) in other.document_frequency {
            *self.document_frequency.entry(t).or_insert(0) += df;
        }
        self
    }

    pub fn df(&self, term: &str) -> u64 {
        self.document_frequency.get(term).copied().unwrap_or(0)
    }

    /// IDF of an already-normalized term. Unseen terms get df = 0.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_documents as f64;
        ((1.0 + n) / (1.0 + self.df(term) as f64)).ln() + 1.0
    }

    pub fn with_threshold(mut self, tau: f64) -> Self {
        self.idf_threshold = tau;
        self
    }
}

/// Folds a document stream into corpus statistics.
pub fn compute_corpus_stats<'a>(
    docs: impl IntoIterator<Item = &'a DocumentRecord>,
    idf_threshold: f64,
) -> Result<CorpusStats> {
    let mut stats = CorpusStats::new(idf_threshold);
    for doc in docs {
        stats.add_document(doc);
    }
    if stats.num_documents == 0 {
        return Err(Error::EmptyInput("corpus statistics need at least one document"));
    }
    Ok(stats)
}
