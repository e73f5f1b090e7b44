//! Gestalt similarity of mention strings and the alignment it induces.
//!
//!     cargo run --example align_strings [-- "first string" "second string"]

use kgsum::align::{align_graphs, gestalt_similarity, DEFAULT_LAMBDA};
use kgsum::kg::{EntityNode, EntityType, KnowledgeGraph};

fn graph(doc: &str, mentions: &[&[&str]]) -> KnowledgeGraph {
    KnowledgeGraph {
        doc_id: doc.into(),
        nodes: mentions
            .iter()
            .enumerate()
            .map(|(i, m)| EntityNode {
                id: KnowledgeGraph::node_id(doc, i),
                mentions: m.iter().map(|s| s.to_string()).collect(),
                count: 1,
                entity_type: EntityType::Method,
                first_section: 0,
            })
            .collect(),
        edges: vec![],
    }
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [a, b] = args.as_slice() {
        println!("{:.4}", gestalt_similarity(a, b));
        return;
    }
    for (a, b) in [
        ("in-domain monolingual corpus", "in domain monolingual corpus"),
        (
            "log-linear and linear interpolation",
            "linear and log-linear interpolation",
        ),
        ("shallow techniques", "shallow processing techniques"),
        ("routing", "word counting"),
    ] {
        println!("{:.4}  {a:?} / {b:?}", gestalt_similarity(a, b));
    }

    let target = graph("t", &[&["machine translation"], &["BLEU"], &["attention"]]);
    let pred = graph(
        "p",
        &[
            &["neural machine translation", "NMT"],
            &["machine-translation"],
            &["BLEU score"],
            &["beam search"],
        ],
    );
    let alignment = align_graphs(&pred, &target, DEFAULT_LAMBDA);
    println!("\nalignment at lambda = {DEFAULT_LAMBDA}:");
    for p in &alignment.pairs {
        println!("  {} -> {} ({:.3})", p.pred, p.target, p.score);
    }
}
