//! Seeded random graphs for gradient checks, overfitting runs and demos.

use std::collections::HashSet;

use rand::Rng;

use crate::baselines::induced_subgraph;
use crate::kg::{EntityNode, EntityType, KnowledgeGraph, RelationEdge, RelationType};

fn random_word(rng: &mut impl Rng, len: usize) -> String {
    (0..len).map(|_| char::from(b'a' + rng.random_range(0..26u8))).collect()
}

/// `n` nodes with random counts, types and sections; each ordered pair is
/// linked with probability `edge_prob` under a random relation type.
pub fn random_graph(rng: &mut impl Rng, doc_id: &str, n: usize, edge_prob: f64) -> KnowledgeGraph {
    let nodes = (0..n)
        .map(|i| EntityNode {
            id: KnowledgeGraph::node_id(doc_id, i),
            mentions: vec![format!("{} {}", random_word(rng, 6), random_word(rng, 6))],
            count: rng.random_range(1..=6),
            entity_type: EntityType::ALL[rng.random_range(0..EntityType::ALL.len())],
            first_section: rng.random_range(0..8),
        })
        .collect();
    let mut edges = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.random_bool(edge_prob) {
                edges.push(RelationEdge {
                    src: KnowledgeGraph::node_id(doc_id, s),
                    dst: KnowledgeGraph::node_id(doc_id, d),
                    relation_type: RelationType::ALL[rng.random_range(0..RelationType::ALL.len())],
                    count: rng.random_range(1..=3),
                });
            }
        }
    }
    KnowledgeGraph {
        doc_id: doc_id.into(),
        nodes,
        edges,
    }
    .canonicalized()
}

/// Rule used for the synthetic salience task: frequent entities and tasks.
pub fn rule_salient(node: &EntityNode) -> bool {
    node.count >= 4 || node.entity_type == EntityType::Task
}

/// `(full, target)` pairs whose target is the subgraph induced by the nodes
/// that satisfy [`rule_salient`].
pub fn rule_corpus(rng: &mut impl Rng, graphs: usize, nodes: usize) -> Vec<(KnowledgeGraph, KnowledgeGraph)> {
    (0..graphs)
        .map(|k| {
            let full = random_graph(rng, &format!("syn{k}"), nodes, 0.15);
            let keep: HashSet<&str> = full
                .nodes
                .iter()
                .filter(|n| rule_salient(n))
                .map(|n| n.id.as_str())
                .collect();
            let target = induced_subgraph(&full, &keep).expect("ids come from the graph");
            (full, target)
        })
        .collect()
}
