#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use kgsum::ingest::{AbstractAnnotation, DocumentRecord, Mention, RelationMention, Window};
use kgsum::kg::{EntityType, KnowledgeGraph, RelationType};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

const VOCAB: [&str; 12] = [
    "neural",
    "model",
    "parser",
    "graph",
    "attention",
    "tagging",
    "corpus",
    "it",
    "the",
    "this",
    "hidden",
    "markov",
];

fn random_type(rng: &mut impl Rng) -> EntityType {
    EntityType::ALL[rng.random_range(0..EntityType::ALL.len())]
}

fn random_relation(rng: &mut impl Rng) -> RelationType {
    RelationType::ALL[rng.random_range(0..RelationType::ALL.len())]
}

/// Up to two non-overlapping spans inside a sentence of `len` tokens,
/// as sentence-relative `(start, end)`.
fn random_spans(rng: &mut impl Rng, len: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut pos = 0;
    for _ in 0..rng.random_range(0..=2) {
        if pos >= len {
            break;
        }
        let start = rng.random_range(pos..len);
        let end = rng.random_range(start + 1..=len.min(start + 3));
        spans.push((start, end));
        pos = end;
    }
    spans
}

/// A random multi-window document. Small vocabulary, so strings repeat across
/// windows; consecutive windows sometimes overlap by one sentence, and a
/// re-listed mention keeps its id or gets a fresh one at random.
pub fn random_document(rng: &mut impl Rng, doc_id: &str, max_sections: usize) -> DocumentRecord {
    let sections: Vec<Vec<Vec<String>>> = (0..rng.random_range(1..=max_sections))
        .map(|_| {
            (0..rng.random_range(2..=5))
                .map(|_| {
                    (0..rng.random_range(3..=7))
                        .map(|_| VOCAB[rng.random_range(0..VOCAB.len())].to_string())
                        .collect()
                })
                .collect()
        })
        .collect();
    let offsets = kgsum::ingest::sentence_offsets(&sections);
    // (start, end, type) of each span, keyed by (section, sentence)
    type Sites = BTreeMap<(usize, usize), Vec<(usize, usize, EntityType)>>;
    let mut sites = Sites::new();
    for (sec, sents) in sections.iter().enumerate() {
        for (si, s) in sents.iter().enumerate() {
            let base = offsets[sec][si].0;
            let spans = random_spans(rng, s.len())
                .into_iter()
                .map(|(a, b)| (base + a, base + b, random_type(rng)))
                .collect();
            sites.insert((sec, si), spans);
        }
    }
    let tokens: Vec<String> = sections.iter().flatten().flatten().cloned().collect();
    let mut mentions: Vec<Mention> = Vec::new();
    let mut last_id: BTreeMap<(usize, usize), String> = BTreeMap::new();
    let mut windows = Vec::new();
    for (sec, sents) in sections.iter().enumerate() {
        let mut first = 0;
        loop {
            let last = (first + rng.random_range(0..3)).min(sents.len() - 1);
            let mut ids = Vec::new();
            for si in first..=last {
                for &(a, b, ty) in &sites[&(sec, si)] {
                    let id = match last_id.get(&(a, b)) {
                        Some(id) if rng.random_bool(0.5) => id.clone(),
                        _ => {
                            let id = format!("m{}", mentions.len());
                            mentions.push(Mention {
                                id: id.clone(),
                                text: tokens[a..b].join(" "),
                                span: [a, b],
                                sentence: si,
                                section: sec,
                                entity_type: ty,
                            });
                            id
                        }
                    };
                    last_id.insert((a, b), id.clone());
                    ids.push(id);
                }
            }
            let mut pool = ids.clone();
            pool.shuffle(rng);
            let mut clusters = Vec::new();
            while pool.len() >= 2 && rng.random_bool(0.5) {
                let take = rng.random_range(2..=pool.len().min(3));
                clusters.push(pool.split_off(pool.len() - take));
            }
            let relations = if ids.len() >= 2 {
                (0..rng.random_range(0..=3))
                    .map(|_| {
                        let h = rng.random_range(0..ids.len());
                        let t = rng.random_range(0..ids.len());
                        RelationMention {
                            head: ids[h].clone(),
                            tail: ids[t].clone(),
                            relation_type: random_relation(rng),
                        }
                    })
                    .collect()
            } else {
                Vec::new()
            };
            windows.push(Window {
                id: windows.len(),
                section: sec,
                sentences: [first, last],
                mention_ids: ids,
                coref_clusters: clusters,
                relations,
            });
            if last + 1 == sents.len() {
                break;
            }
            first = if last > first && rng.random_bool(0.5) {
                last
            } else {
                last + 1
            };
        }
    }
    let doc = DocumentRecord {
        doc_id: doc_id.into(),
        sections,
        mentions,
        windows,
        abstract_annotation: None,
        abstract_graph: None,
    };
    doc.validate().expect("generator produces valid records");
    doc
}

/// A one-section, one-window document plus an abstract annotation carrying
/// exactly the same sentences, mentions, clusters and relations.
pub fn single_window_document(rng: &mut impl Rng, doc_id: &str) -> (DocumentRecord, AbstractAnnotation) {
    let mut doc = loop {
        let d = random_document(rng, doc_id, 1);
        if !d.mentions.is_empty() {
            break d;
        }
    };
    let sentences = doc.sections[0].clone();
    let last = sentences.len() - 1;
    let mut seen = std::collections::HashSet::new();
    doc.mentions.retain(|m| seen.insert(m.span));
    let ids: Vec<String> = doc.mentions.iter().map(|m| m.id.clone()).collect();
    let mut pool = ids.clone();
    pool.shuffle(rng);
    let mut clusters = Vec::new();
    while pool.len() >= 2 && rng.random_bool(0.6) {
        let take = rng.random_range(2..=pool.len().min(3));
        clusters.push(pool.split_off(pool.len() - take));
    }
    let relations: Vec<RelationMention> = (0..rng.random_range(0..=5))
        .map(|_| RelationMention {
            head: ids[rng.random_range(0..ids.len())].clone(),
            tail: ids[rng.random_range(0..ids.len())].clone(),
            relation_type: random_relation(rng),
        })
        .collect();
    doc.windows = vec![Window {
        id: 0,
        section: 0,
        sentences: [0, last],
        mention_ids: ids,
        coref_clusters: clusters.clone(),
        relations: relations.clone(),
    }];
    doc.validate().expect("valid");
    let annotation = AbstractAnnotation {
        sentences,
        mentions: doc.mentions.clone(),
        coref_clusters: clusters,
        relations,
    };
    (doc, annotation)
}

/// Order-free description of a graph: nodes by content, edges by the
/// content of their endpoints.
pub fn graph_shape(g: &KnowledgeGraph) -> (Vec<String>, Vec<String>) {
    let describe = |i: usize| {
        let n = &g.nodes[i];
        let mut m = n.mentions.clone();
        m.sort();
        format!("{m:?}/{}/{}/{}", n.count, n.entity_type, n.first_section)
    };
    let mut nodes: Vec<String> = (0..g.nodes.len()).map(describe).collect();
    nodes.sort();
    let mut edges: Vec<String> = g
        .indexed_edges()
        .into_iter()
        .map(|(s, d, e)| format!("{} -{}-> {} x{}", describe(s), e.relation_type, describe(d), e.count))
        .collect();
    edges.sort();
    (nodes, edges)
}
