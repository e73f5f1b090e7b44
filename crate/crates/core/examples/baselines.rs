//! Runs every non-learned selector on the fixture corpus and scores it.
//!
//!     cargo run --example baselines

use std::collections::BTreeSet;
use std::path::PathBuf;

use kgsum::align::{align_graphs, DEFAULT_LAMBDA};
use kgsum::baselines::{gold_entity_select, pagerank_select, summary_induced_graph, topk_freq_select, BaselineConfig};
use kgsum::build::{build_full_graph_with_provenance, document_target, MergePolicy};
use kgsum::ingest::jsonl::read_jsonl;
use kgsum::ingest::{compute_corpus_stats, parse_document_record, DEFAULT_IDF_THRESHOLD};
use kgsum::metrics::{aggregate, score_document, TypeMatch};
use serde::Deserialize;

#[derive(Deserialize)]
struct Selection {
    doc_id: String,
    sentences: Vec<(usize, usize)>,
}

fn main() -> kgsum::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let docs = kgsum::ingest::jsonl::read_lines(&fixtures.join("docs.jsonl"), parse_document_record)?;
    let selections: Vec<Selection> = read_jsonl(&fixtures.join("selections.jsonl"))?;
    let stats = compute_corpus_stats(&docs, DEFAULT_IDF_THRESHOLD)?;
    let cfg = BaselineConfig {
        k: 5,
        ..Default::default()
    };

    let names = ["pagerank", "topk-freq", "gold-entity", "summary-induced"];
    let mut reports = vec![Vec::new(); names.len()];
    for doc in &docs {
        let built = build_full_graph_with_provenance(doc, &stats, MergePolicy::Transitive)?;
        let Some((target, _)) = document_target(doc)? else {
            continue;
        };
        let selected: BTreeSet<(usize, usize)> = selections
            .iter()
            .filter(|s| s.doc_id == doc.doc_id)
            .flat_map(|s| s.sentences.iter().copied())
            .collect();
        let preds = [
            pagerank_select(&built.graph, &cfg)?,
            topk_freq_select(&built.graph, &cfg)?,
            gold_entity_select(&built.graph, &target, &cfg),
            summary_induced_graph(doc, &built, &selected)?,
        ];
        for (i, pred) in preds.iter().enumerate() {
            let alignment = align_graphs(pred, &target, DEFAULT_LAMBDA);
            reports[i].push(score_document(&alignment, pred, &target, TypeMatch::Any).report());
        }
    }
    println!(
        "{:<16} {:>8} {:>8} {:>8} {:>8} {:>6}",
        "method", "ent F1", "ent F1t", "rel F1", "rel F1t", "dup"
    );
    for (name, reps) in names.iter().zip(&reports) {
        let r = aggregate(reps)?;
        println!(
            "{name:<16} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>6}",
            r.untyped_entity.f1,
            r.typed_entity.f1,
            r.untyped_relation.f1,
            r.typed_relation.f1,
            r.duplication.map_or("-".into(), |d| format!("{d:.2}"))
        );
    }
    Ok(())
}
