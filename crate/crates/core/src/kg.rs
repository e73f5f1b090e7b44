//! Graph and label types shared by every stage of the pipeline.
//!
//! A [`KnowledgeGraph`] is used both for full-document graphs and for
//! summary (target or predicted) graphs. Node order is meaningful: the
//! position of a node in [`KnowledgeGraph::nodes`] is its ordinal, and every
//! tie-break in the crate falls back to the lower ordinal.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Entity label set of the scientific IE annotation scheme.
///
/// Variant order is the fixed enum order used for tie-breaking and for the
/// one-hot type feature of the salience classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    Task,
    Method,
    Metric,
    Material,
    OtherScientificTerm,
    Generic,
}

impl EntityType {
    pub const ALL: [EntityType; 6] = [
        EntityType::Task,
        EntityType::Method,
        EntityType::Metric,
        EntityType::Material,
        EntityType::OtherScientificTerm,
        EntityType::Generic,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Task => "Task",
            EntityType::Method => "Method",
            EntityType::Metric => "Metric",
            EntityType::Material => "Material",
            EntityType::OtherScientificTerm => "OtherScientificTerm",
            EntityType::Generic => "Generic",
        }
    }
}

impl FromStr for EntityType {
    type Err = Error;

    /// Accepts the canonical names; the upper-case spellings emitted by
    /// SciERC-trained extractors are accepted as aliases.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Task" | "TASK" => EntityType::Task,
            "Method" | "METHOD" => EntityType::Method,
            "Metric" | "METRIC" => EntityType::Metric,
            "Material" | "MATERIAL" => EntityType::Material,
            "OtherScientificTerm" | "OTHERSCIENTIFICTERM" => EntityType::OtherScientificTerm,
            "Generic" | "GENERIC" => EntityType::Generic,
            _ => {
                return Err(Error::UnknownLabel {
                    kind: "entity type",
                    label: s.to_string(),
                })
            }
        })
    }
}

/// Relation label set. Variant order fixes the attention-head index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationType {
    Compare,
    PartOf,
    Conjunction,
    EvaluateFor,
    FeatureOf,
    UsedFor,
    HyponymOf,
}

impl RelationType {
    pub const ALL: [RelationType; 7] = [
        RelationType::Compare,
        RelationType::PartOf,
        RelationType::Conjunction,
        RelationType::EvaluateFor,
        RelationType::FeatureOf,
        RelationType::UsedFor,
        RelationType::HyponymOf,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::Compare => "Compare",
            RelationType::PartOf => "PartOf",
            RelationType::Conjunction => "Conjunction",
            RelationType::EvaluateFor => "EvaluateFor",
            RelationType::FeatureOf => "FeatureOf",
            RelationType::UsedFor => "UsedFor",
            RelationType::HyponymOf => "HyponymOf",
        }
    }
}

impl FromStr for RelationType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Compare" | "COMPARE" => RelationType::Compare,
            "PartOf" | "PART-OF" => RelationType::PartOf,
            "Conjunction" | "CONJUNCTION" => RelationType::Conjunction,
            "EvaluateFor" | "EVALUATE-FOR" => RelationType::EvaluateFor,
            "FeatureOf" | "FEATURE-OF" => RelationType::FeatureOf,
            "UsedFor" | "USED-FOR" => RelationType::UsedFor,
            "HyponymOf" | "HYPONYM-OF" => RelationType::HyponymOf,
            _ => {
                return Err(Error::UnknownLabel {
                    kind: "relation type",
                    label: s.to_string(),
                })
            }
        })
    }
}

macro_rules! label_serde {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

label_serde!(EntityType);
label_serde!(RelationType);

/// An entity: a cluster of coreferent mention strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityNode {
    pub id: String,
    /// Distinct raw mention strings, in first-occurrence order.
    pub mentions: Vec<String>,
    /// Number of mention occurrences collapsed into this node.
    pub count: u32,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
    pub first_section: usize,
}

impl EntityNode {
    /// The longest mention string; ties go to the lexicographically smallest.
    pub fn longest_mention(&self) -> &str {
        self.mentions
            .iter()
            .min_by(|a, b| b.chars().count().cmp(&a.chars().count()).then_with(|| a.cmp(b)))
            .map(String::as_str)
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationEdge {
    pub src: String,
    pub dst: String,
    #[serde(rename = "type")]
    pub relation_type: RelationType,
    /// Number of relation mentions collapsed into this edge.
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeGraph {
    pub doc_id: String,
    #[serde(default)]
    pub nodes: Vec<EntityNode>,
    #[serde(default)]
    pub edges: Vec<RelationEdge>,
}

/// One failed [`KnowledgeGraph`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNodeId(String),
    EmptyMentions(String),
    ZeroNodeCount(String),
    DanglingEndpoint { edge: usize, node: String },
    SelfLoop { edge: usize, node: String },
    DuplicateEdge { edge: usize },
    ZeroEdgeCount { edge: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNodeId(id) => write!(f, "duplicate node id `{id}`"),
            Violation::EmptyMentions(id) => write!(f, "node `{id}` has no mentions"),
            Violation::ZeroNodeCount(id) => write!(f, "node `{id}` has mention count 0"),
            Violation::DanglingEndpoint { edge, node } => {
                write!(f, "edge {edge} references missing node `{node}`")
            }
            Violation::SelfLoop { edge, node } => write!(f, "edge {edge} is a self-loop on `{node}`"),
            Violation::DuplicateEdge { edge } => {
                write!(f, "edge {edge} duplicates an earlier (src, dst, type) triple")
            }
            Violation::ZeroEdgeCount { edge } => write!(f, "edge {edge} has mention count 0"),
        }
    }
}

/// Checks every graph invariant and reports one violation per failure.
pub fn validate_graph(g: &KnowledgeGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for node in &g.nodes {
        if !ids.insert(node.id.as_str()) {
            out.push(Violation::DuplicateNodeId(node.id.clone()));
        }
        if node.mentions.is_empty() {
            out.push(Violation::EmptyMentions(node.id.clone()));
        }
        if node.count == 0 {
            out.push(Violation::ZeroNodeCount(node.id.clone()));
        }
    }
    let mut triples = HashSet::new();
    for (i, edge) in g.edges.iter().enumerate() {
        for end in [&edge.src, &edge.dst] {
            if !ids.contains(end.as_str()) {
                out.push(Violation::DanglingEndpoint {
                    edge: i,
                    node: end.clone(),
                });
            }
        }
        if edge.src == edge.dst {
            out.push(Violation::SelfLoop {
                edge: i,
                node: edge.src.clone(),
            });
        }
        if !triples.insert((edge.src.as_str(), edge.dst.as_str(), edge.relation_type)) {
            out.push(Violation::DuplicateEdge { edge: i });
        }
        if edge.count == 0 {
            out.push(Violation::ZeroEdgeCount { edge: i });
        }
    }
    out
}

impl KnowledgeGraph {
    pub fn empty(doc_id: impl Into<String>) -> Self {
        KnowledgeGraph {
            doc_id: doc_id.into(),
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn node_id(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}:{ordinal}")
    }

    /// Map from node id to ordinal.
    pub fn index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect()
    }

    /// Edges as `(src ordinal, dst ordinal, edge)`. Dangling edges are skipped.
    pub fn indexed_edges(&self) -> Vec<(usize, usize, &RelationEdge)> {
        let index = self.index();
        self.edges
            .iter()
            .filter_map(|e| Some((*index.get(e.src.as_str())?, *index.get(e.dst.as_str())?, e)))
            .collect()
    }

    /// Validates and returns the graph, or the first violation as an error.
    pub fn validated(self) -> Result<Self, Error> {
        match validate_graph(&self).first() {
            None => Ok(self),
            Some(v) => Err(Error::InvalidRecord(format!("graph `{}`: {v}", self.doc_id))),
        }
    }

    /// Canonical ordering for semantic comparison: edges sorted by
    /// (src, dst, type). Node order is kept since it carries ordinals.
    pub fn canonicalized(mut self) -> Self {
        self.edges.sort_by(|a, b| {
            (a.src.as_str(), a.dst.as_str(), a.relation_type).cmp(&(b.src.as_str(), b.dst.as_str(), b.relation_type))
        });
        self
    }
}
