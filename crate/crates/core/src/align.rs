//! Relaxed entity alignment between a predicted and a target graph.
//!
//! Mention strings are compared with Ratcliff/Obershelp gestalt matching
//! after [`normalize_mention`]; a node pair scores the maximum over all of
//! their mention pairs. Each predicted node independently picks its best
//! target, provided the score reaches `lambda`.

use serde::{Deserialize, Serialize};

use crate::kg::{EntityNode, KnowledgeGraph};
use crate::text::normalize_mention;

pub const DEFAULT_LAMBDA: f64 = 0.7;

/// Longest common substring of `a` and `b` as `(start_a, start_b, len)`.
/// Ties go to the leftmost start in `a`, then the leftmost start in `b`.
fn longest_common_substring(a: &[char], b: &[char]) -> (usize, usize, usize) {
    let mut best = (0, 0, 0);
    // run[j + 1] = length of the common suffix ending at a[i], b[j]
    let mut prev = vec![0usize; b.len() + 1];
    let mut run = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            run[j + 1] = if ca == cb { prev[j] + 1 } else { 0 };
            if run[j + 1] > best.2 {
                best = (i + 1 - run[j + 1], j + 1 - run[j + 1], run[j + 1]);
            }
        }
        std::mem::swap(&mut prev, &mut run);
    }
    best
}

/// Number of characters matched by recursive longest-common-substring
/// decomposition.
fn matched_chars(a: &[char], b: &[char]) -> usize {
    let mut total = 0;
    let mut stack = vec![(a, b)];
    while let Some((a, b)) = stack.pop() {
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let (i, j, len) = longest_common_substring(a, b);
        if len == 0 {
            continue;
        }
        total += len;
        stack.push((&a[..i], &b[..j]));
        stack.push((&a[i + len..], &b[j + len..]));
    }
    total
}

/// Gestalt similarity `2M / (|a| + |b|)` of the normalized strings, in
/// characters. Two empty strings score 1.0, one empty string scores 0.0.
///
/// Not symmetric in general: when longest blocks tie, the leftmost-in-`a`
/// rule may split `(a, b)` and `(b, a)` differently.
pub fn gestalt_similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = normalize_mention(a).chars().collect();
    let b: Vec<char> = normalize_mention(b).chars().collect();
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => 2.0 * matched_chars(&a, &b) as f64 / (a.len() + b.len()) as f64,
    }
}

/// Maximum gestalt similarity over all (target mention, predicted mention) pairs.
pub fn node_similarity(target: &EntityNode, predicted: &EntityNode) -> f64 {
    target
        .mentions
        .iter()
        .flat_map(|t| predicted.mentions.iter().map(move |p| gestalt_similarity(t, p)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignedPair {
    pub pred: String,
    pub target: String,
    pub score: f64,
}

/// Predicted-to-target node mapping; one line of an alignment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alignment {
    pub doc_id: String,
    /// In predicted-node order; unaligned predicted nodes are absent.
    pub pairs: Vec<AlignedPair>,
    pub lambda: f64,
}

impl Alignment {
    pub fn target_of(&self, pred_id: &str) -> Option<&str> {
        self.pairs.iter().find(|p| p.pred == pred_id).map(|p| p.target.as_str())
    }
}

/// Best target for one predicted node, `(target ordinal, score)`, before
/// thresholding. Ties go to the lower target ordinal.
pub fn best_target(predicted: &EntityNode, target: &KnowledgeGraph) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (t, node) in target.nodes.iter().enumerate() {
        let s = node_similarity(node, predicted);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((t, s));
        }
    }
    best
}

pub fn align_graphs(predicted: &KnowledgeGraph, target: &KnowledgeGraph, lambda: f64) -> Alignment {
    let pairs = predicted
        .nodes
        .iter()
        .filter_map(|p| {
            let (t, score) = best_target(p, target)?;
            (score >= lambda).then(|| AlignedPair {
                pred: p.id.clone(),
                target: target.nodes[t].id.clone(),
                score,
            })
        })
        .collect();
    Alignment {
        doc_id: predicted.doc_id.clone(),
        pairs,
        lambda,
    }
}
