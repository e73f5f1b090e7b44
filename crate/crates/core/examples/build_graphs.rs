//! Builds full-document and abstract (target) graphs from a documents file.
//!
//!     cargo run --example build_graphs [-- docs.jsonl]

use std::path::PathBuf;

use kgsum::build::{build_full_graph, document_target, MergePolicy};
use kgsum::ingest::jsonl::read_lines;
use kgsum::ingest::{compute_corpus_stats, parse_document_record, DEFAULT_IDF_THRESHOLD};

fn main() -> kgsum::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/docs.jsonl"));
    let docs = read_lines(&path, parse_document_record)?;
    let stats = compute_corpus_stats(&docs, DEFAULT_IDF_THRESHOLD)?;
    for doc in &docs {
        let full = build_full_graph(doc, &stats, MergePolicy::Transitive)?;
        println!(
            "{}: {} mentions in {} windows -> {} nodes, {} edges",
            doc.doc_id,
            doc.mentions.len(),
            doc.windows.len(),
            full.nodes.len(),
            full.edges.len()
        );
        for n in full.nodes.iter().filter(|n| n.mentions.len() > 1) {
            println!("    {} x{} {:?}", n.entity_type, n.count, n.mentions);
        }
        if let Some((target, tokens)) = document_target(doc)? {
            println!(
                "  abstract: {tokens} tokens -> {} nodes, {} edges",
                target.nodes.len(),
                target.edges.len()
            );
        }
    }
    Ok(())
}
