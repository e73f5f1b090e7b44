//! Scores a predicted graph against a target graph and prints the report.
//!
//!     cargo run --example evaluate

use kgsum::align::{align_graphs, DEFAULT_LAMBDA};
use kgsum::kg::{EntityNode, EntityType, KnowledgeGraph, RelationEdge, RelationType};
use kgsum::metrics::{score_document, TypeMatch};

fn node(doc: &str, i: usize, mention: &str, ty: EntityType) -> EntityNode {
    EntityNode {
        id: KnowledgeGraph::node_id(doc, i),
        mentions: vec![mention.into()],
        count: 1,
        entity_type: ty,
        first_section: 0,
    }
}

fn edge(doc: &str, s: usize, d: usize, ty: RelationType) -> RelationEdge {
    RelationEdge {
        src: KnowledgeGraph::node_id(doc, s),
        dst: KnowledgeGraph::node_id(doc, d),
        relation_type: ty,
        count: 1,
    }
}

fn main() {
    let target = KnowledgeGraph {
        doc_id: "t".into(),
        nodes: vec![
            node("t", 0, "pointer-generator network", EntityType::Method),
            node("t", 1, "abstractive summarization", EntityType::Task),
            node("t", 2, "ROUGE", EntityType::Metric),
        ],
        edges: vec![
            edge("t", 0, 1, RelationType::UsedFor),
            edge("t", 2, 0, RelationType::EvaluateFor),
        ],
    };
    // two predictions collapse onto the first target node
    let pred = KnowledgeGraph {
        doc_id: "p".into(),
        nodes: vec![
            node("p", 0, "pointer generator network", EntityType::Method),
            node("p", 1, "pointer-generator networks", EntityType::Method),
            node("p", 2, "abstractive summarisation", EntityType::Task),
            node("p", 3, "coverage", EntityType::OtherScientificTerm),
        ],
        edges: vec![
            edge("p", 0, 2, RelationType::UsedFor),
            edge("p", 1, 2, RelationType::UsedFor),
            edge("p", 3, 0, RelationType::PartOf),
        ],
    };
    let alignment = align_graphs(&pred, &target, DEFAULT_LAMBDA);
    let scores = score_document(&alignment, &pred, &target, TypeMatch::Any);
    println!("{}", serde_json::to_string_pretty(&scores.report()).unwrap());
}
