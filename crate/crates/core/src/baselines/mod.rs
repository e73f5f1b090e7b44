//! Non-learned summary-graph predictors. Every selector picks a set of
//! full-graph nodes and returns the subgraph they induce.

mod pagerank;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::align::node_similarity;
use crate::build::BuiltGraph;
use crate::error::{Error, Result};
use crate::ingest::DocumentRecord;
use crate::kg::KnowledgeGraph;

pub use pagerank::{pagerank_scores, PageRankParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub k: usize,
    pub pagerank_damping: f64,
    pub pagerank_tol: f64,
    pub pagerank_max_iter: usize,
    pub pagerank_directed: bool,
    pub ge_threshold: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            k: 18,
            pagerank_damping: 0.85,
            pagerank_tol: 1e-9,
            pagerank_max_iter: 200,
            pagerank_directed: false,
            ge_threshold: 0.7,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if !(self.pagerank_damping > 0.0 && self.pagerank_damping < 1.0) {
            return Err(Error::Config("damping must lie in (0, 1)".into()));
        }
        if self.pagerank_tol.is_nan() || self.pagerank_tol <= 0.0 {
            return Err(Error::Config("pagerank tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn pagerank_params(&self) -> PageRankParams {
        PageRankParams {
            damping: self.pagerank_damping,
            tol: self.pagerank_tol,
            max_iter: self.pagerank_max_iter,
            directed: self.pagerank_directed,
        }
    }
}

/// Keeps the given nodes (in full-graph order) and every edge between them.
pub fn induced_subgraph(full: &KnowledgeGraph, keep: &HashSet<&str>) -> Result<KnowledgeGraph> {
    let index = full.index();
    if let Some(missing) = keep.iter().find(|id| !index.contains_key(**id)) {
        return Err(Error::UnknownNode(missing.to_string()));
    }
    Ok(KnowledgeGraph {
        doc_id: full.doc_id.clone(),
        nodes: full
            .nodes
            .iter()
            .filter(|n| keep.contains(n.id.as_str()))
            .cloned()
            .collect(),
        edges: full
            .edges
            .iter()
            .filter(|e| keep.contains(e.src.as_str()) && keep.contains(e.dst.as_str()))
            .cloned()
            .collect(),
    })
}

fn induced_by_ordinals(full: &KnowledgeGraph, ordinals: impl IntoIterator<Item = usize>) -> KnowledgeGraph {
    let keep: HashSet<&str> = ordinals.into_iter().map(|i| full.nodes[i].id.as_str()).collect();
    induced_subgraph(full, &keep).expect("ordinals come from the same graph")
}

/// Top `k` ordinals by descending score, ties by ordinal.
fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

pub fn pagerank_select(full: &KnowledgeGraph, cfg: &BaselineConfig) -> Result<KnowledgeGraph> {
    let scores = pagerank_scores(full, &cfg.pagerank_params())?;
    Ok(induced_by_ordinals(full, top_k(&scores, cfg.k)))
}

/// The `k` entities with the most mentions.
pub fn topk_freq_select(full: &KnowledgeGraph, cfg: &BaselineConfig) -> Result<KnowledgeGraph> {
    if full.nodes.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let counts: Vec<f64> = full.nodes.iter().map(|n| f64::from(n.count)).collect();
    Ok(induced_by_ordinals(full, top_k(&counts, cfg.k)))
}

/// Oracle selector: for each target node, the most similar full-graph node
/// (lowest ordinal on ties) if its similarity reaches `ge_threshold`.
pub fn gold_entity_select(full: &KnowledgeGraph, target: &KnowledgeGraph, cfg: &BaselineConfig) -> KnowledgeGraph {
    let mut selected = BTreeSet::new();
    for t in &target.nodes {
        let mut best: Option<(usize, f64)> = None;
        for (i, f) in full.nodes.iter().enumerate() {
            let s = node_similarity(t, f);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        if let Some((i, s)) = best {
            if s >= cfg.ge_threshold {
                selected.insert(i);
            }
        }
    }
    induced_by_ordinals(full, selected)
}

/// Graph induced by an extractive text summary: nodes with a mention in a
/// selected sentence, and edges backed by a relation mention whose head and
/// tail both lie in selected sentences. `selected` holds
/// `(section, sentence)` ordinals.
pub fn summary_induced_graph(
    doc: &DocumentRecord,
    built: &BuiltGraph,
    selected: &BTreeSet<(usize, usize)>,
) -> Result<KnowledgeGraph> {
    if let Some(&(sec, sent)) = selected
        .iter()
        .find(|(sec, sent)| doc.sentence_len(*sec, *sent).is_none())
    {
        return Err(Error::InvalidRecord(format!(
            "{}: selected sentence ({sec}, {sent}) does not exist",
            doc.doc_id
        )));
    }
    let full = &built.graph;
    let inside = |site: usize| {
        let m = &built.mentions[site];
        selected.contains(&(m.section, m.sentence))
    };
    let nodes: BTreeSet<usize> = (0..built.mentions.len())
        .filter(|&i| inside(i))
        .map(|i| built.mentions[i].node)
        .collect();
    let edges: HashSet<(usize, usize, crate::kg::RelationType)> = built
        .relations
        .iter()
        .filter(|r| inside(r.head) && inside(r.tail))
        .map(|r| {
            (
                built.mentions[r.head].node,
                built.mentions[r.tail].node,
                r.relation_type,
            )
        })
        .collect();
    let index = full.index();
    Ok(KnowledgeGraph {
        doc_id: full.doc_id.clone(),
        nodes: nodes.iter().map(|&i| full.nodes[i].clone()).collect(),
        edges: full
            .edges
            .iter()
            .filter(|e| edges.contains(&(index[e.src.as_str()], index[e.dst.as_str()], e.relation_type)))
            .cloned()
            .collect(),
    })
}
