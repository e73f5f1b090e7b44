//! On-disk formats, corpus IDF statistics, dataset filters and the
//! external embedding table.

mod document;
mod embedding;
pub mod jsonl;
mod stats;

pub use document::{
    filter_pair, parse_document_record, parse_graph, sentence_offsets, AbstractAnnotation, DocumentRecord, DropReason,
    FilterDecision, Mention, RelationMention, Window, MAX_ABSTRACT_TOKENS, MIN_TARGET_RELATIONS,
};
pub use embedding::{hash_embedding, load_embedding_table, EmbeddingTable, FallbackMode};
pub use stats::{compute_corpus_stats, CorpusStats, DEFAULT_IDF_THRESHOLD};
