//! Assembles knowledge graphs from windowed IE output and from abstract
//! annotations.
//!
//! Full-document construction:
//! 1. mentions listed by several windows with the same token span are one
//!    mention (consecutive windows share a sentence);
//! 2. coreference clusters are unioned within each window, unclustered
//!    mentions stay singletons;
//! 3. clusters from different windows sharing a normalized non-generic
//!    mention string are merged;
//! 4. each final cluster becomes an [`EntityNode`];
//! 5. relation mentions become edges between clusters, self-loops dropped.
//!
//! Node ordinals follow the position of each cluster's first mention in the
//! document, so the result does not depend on window order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AbstractAnnotation, CorpusStats, DocumentRecord, Mention, RelationMention};
use crate::kg::{EntityNode, EntityType, KnowledgeGraph, RelationEdge, RelationType};
use crate::text::{content_tokens, normalize_token};

/// Sentences longer than this are discarded before graph construction.
pub const MAX_SENTENCE_TOKENS: usize = 150;

/// How clusters from different windows that share a non-generic string merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergePolicy {
    /// Every cluster containing the string merges, across any number of clusters.
    #[default]
    Transitive,
    /// Merge only when exactly two clusters contain the string.
    UniquePair,
}

impl FromStr for MergePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transitive" => Ok(MergePolicy::Transitive),
            "unique-pair" => Ok(MergePolicy::UniquePair),
            _ => Err(Error::Config(format!("unknown merge policy `{s}`"))),
        }
    }
}

/// A mention is generic unless, after dropping pronouns and determiners, it
/// has more than one token or is a unigram whose IDF exceeds the threshold.
pub fn is_generic_mention(text: &str, stats: &CorpusStats) -> bool {
    let tokens = content_tokens(text);
    match tokens.as_slice() {
        [] => true,
        [unigram] => stats.idf(unigram) <= stats.idf_threshold,
        _ => false,
    }
}

/// Key under which mention strings are compared for cross-window merging.
fn merge_key(text: &str) -> String {
    text.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// One distinct mention occurrence in the built graph.
#[derive(Debug, Clone, PartialEq)]
pub struct MentionSite {
    pub span: [usize; 2],
    pub text: String,
    pub section: usize,
    pub sentence: usize,
    pub entity_type: EntityType,
    /// Ordinal of the node this mention was collapsed into.
    pub node: usize,
}

/// A distinct relation mention, endpoints given as [`MentionSite`] indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationSite {
    pub head: usize,
    pub tail: usize,
    pub relation_type: RelationType,
}

/// A graph together with the mention-level provenance it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltGraph {
    pub graph: KnowledgeGraph,
    pub mentions: Vec<MentionSite>,
    pub relations: Vec<RelationSite>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Roots always point at the smaller index.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Windowed annotation after mention ids have been resolved to sites.
struct Collapse<'a> {
    doc_id: &'a str,
    /// Sorted by span; spans are unique.
    sites: Vec<Site<'a>>,
    clusters: Vec<Vec<usize>>,
    relations: BTreeSet<RelationSite>,
}

struct Site<'a> {
    span: [usize; 2],
    text: &'a str,
    section: usize,
    sentence: usize,
    types: Vec<EntityType>,
    windows: BTreeSet<usize>,
}

/// Most frequent type; ties prefer non-Generic, then enum order.
fn dominant_type(types: impl IntoIterator<Item = EntityType>) -> EntityType {
    let mut counts: BTreeMap<EntityType, usize> = BTreeMap::new();
    for t in types {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|(ta, ca), (tb, cb)| {
            ca.cmp(cb)
                .then_with(|| (*ta != EntityType::Generic).cmp(&(*tb != EntityType::Generic)))
                .then_with(|| tb.cmp(ta))
        })
        .map(|(t, _)| t)
        .unwrap_or(EntityType::Generic)
}

/// (window ordinal, mention ids, clusters, relations)
type WindowView<'w, 'a> = (usize, Vec<&'w str>, &'a [Vec<String>], &'a [RelationMention]);

impl<'a> Collapse<'a> {
    /// Resolves windows to sites. `windows` yields (window ordinal, mention
    /// ids, clusters, relations). Mentions in `skip` are dropped along with
    /// every cluster membership and relation that touches them.
    fn new(
        doc_id: &'a str,
        table: &HashMap<&str, &'a Mention>,
        windows: Vec<WindowView<'_, 'a>>,
        skip: impl Fn(&Mention) -> bool,
    ) -> Result<Self> {
        let lookup = |id: &str| -> Result<&'a Mention> {
            table
                .get(id)
                .copied()
                .ok_or_else(|| Error::UndefinedMention(id.to_string()))
        };

        let mut by_span: BTreeMap<[usize; 2], Site<'a>> = BTreeMap::new();
        for (w, ids, _, _) in &windows {
            for id in ids {
                let m = lookup(id)?;
                if skip(m) {
                    continue;
                }
                let site = by_span.entry(m.span).or_insert_with(|| Site {
                    span: m.span,
                    text: &m.text,
                    section: m.section,
                    sentence: m.sentence,
                    types: Vec::new(),
                    windows: BTreeSet::new(),
                });
                site.types.push(m.entity_type);
                site.windows.insert(*w);
            }
        }
        let index: HashMap<[usize; 2], usize> = by_span.keys().enumerate().map(|(i, s)| (*s, i)).collect();
        let resolve = |id: &str| -> Result<Option<usize>> {
            let m = lookup(id)?;
            Ok(if skip(m) { None } else { index.get(&m.span).copied() })
        };

        let mut clusters = Vec::new();
        let mut relations = BTreeSet::new();
        for (_, _, window_clusters, window_relations) in &windows {
            for cluster in window_clusters.iter() {
                let mut members = Vec::new();
                for id in cluster {
                    members.extend(resolve(id)?);
                }
                clusters.push(members);
            }
            for r in window_relations.iter() {
                if let (Some(head), Some(tail)) = (resolve(&r.head)?, resolve(&r.tail)?) {
                    relations.insert(RelationSite {
                        head,
                        tail,
                        relation_type: r.relation_type,
                    });
                }
            }
        }
        Ok(Collapse {
            doc_id,
            sites: by_span.into_values().collect(),
            clusters,
            relations,
        })
    }

    fn run(self, merge: Option<(&CorpusStats, MergePolicy)>) -> BuiltGraph {
        let n = self.sites.len();
        let mut uf = UnionFind::new(n);
        for cluster in &self.clusters {
            for pair in cluster.windows(2) {
                uf.union(pair[0], pair[1]);
            }
        }

        if let Some((stats, policy)) = merge {
            // Decisions are taken against the within-window clusters, then applied.
            let mut by_key: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (i, site) in self.sites.iter().enumerate() {
                if !is_generic_mention(site.text, stats) {
                    by_key.entry(merge_key(site.text)).or_default().push(i);
                }
            }
            let mut pending = Vec::new();
            for members in by_key.values() {
                let roots: BTreeSet<usize> = members.iter().map(|&i| uf.find(i)).collect();
                let windows: BTreeSet<usize> = members
                    .iter()
                    .flat_map(|&i| self.sites[i].windows.iter().copied())
                    .collect();
                let merge = windows.len() >= 2
                    && match policy {
                        MergePolicy::Transitive => roots.len() >= 2,
                        MergePolicy::UniquePair => roots.len() == 2,
                    };
                if merge {
                    pending.push(members.clone());
                }
            }
            for members in pending {
                for pair in members.windows(2) {
                    uf.union(pair[0], pair[1]);
                }
            }
        }

        // Roots are minimal members, so ascending root order is first-mention order.
        let mut node_of_root = BTreeMap::new();
        for i in 0..n {
            let root = uf.find(i);
            let next = node_of_root.len();
            node_of_root.entry(root).or_insert(next);
        }
        let node_of: Vec<usize> = (0..n).map(|i| node_of_root[&uf.find(i)]).collect();

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); node_of_root.len()];
        for (i, &node) in node_of.iter().enumerate() {
            members[node].push(i);
        }
        let nodes: Vec<EntityNode> = members
            .iter()
            .enumerate()
            .map(|(ordinal, sites)| {
                let mut mentions: Vec<String> = Vec::new();
                for &s in sites {
                    let text = self.sites[s].text;
                    if !mentions.iter().any(|m| m == text) {
                        mentions.push(text.to_string());
                    }
                }
                EntityNode {
                    id: KnowledgeGraph::node_id(self.doc_id, ordinal),
                    mentions,
                    count: sites.len() as u32,
                    entity_type: dominant_type(
                        sites
                            .iter()
                            .map(|&s| dominant_type(self.sites[s].types.iter().copied())),
                    ),
                    first_section: sites.iter().map(|&s| self.sites[s].section).min().unwrap_or(0),
                }
            })
            .collect();

        let mut edge_counts: BTreeMap<(usize, usize, RelationType), u32> = BTreeMap::new();
        for r in &self.relations {
            let (src, dst) = (node_of[r.head], node_of[r.tail]);
            if src != dst {
                *edge_counts.entry((src, dst, r.relation_type)).or_insert(0) += 1;
            }
        }
        let edges = edge_counts
            .into_iter()
            .map(|((src, dst, relation_type), count)| RelationEdge {
                src: nodes[src].id.clone(),
                dst: nodes[dst].id.clone(),
                relation_type,
                count,
            })
            .collect();

        let mentions = self
            .sites
            .iter()
            .zip(&node_of)
            .map(|(s, &node)| MentionSite {
                span: s.span,
                text: s.text.to_string(),
                section: s.section,
                sentence: s.sentence,
                entity_type: dominant_type(s.types.iter().copied()),
                node,
            })
            .collect();

        BuiltGraph {
            graph: KnowledgeGraph {
                doc_id: self.doc_id.to_string(),
                nodes,
                edges,
            },
            mentions,
            relations: self.relations.into_iter().collect(),
        }
    }
}

/// Builds the full-document graph and keeps mention provenance.
pub fn build_full_graph_with_provenance(
    doc: &DocumentRecord,
    stats: &CorpusStats,
    policy: MergePolicy,
) -> Result<BuiltGraph> {
    let table = doc.mention_table();
    let long = |m: &Mention| {
        doc.sentence_len(m.section, m.sentence)
            .is_some_and(|len| len > MAX_SENTENCE_TOKENS)
    };
    let dropped = doc.mentions.iter().filter(|m| long(m)).count();
    if dropped > 0 {
        log::warn!(
            "{}: discarding {dropped} mention(s) in sentences longer than {MAX_SENTENCE_TOKENS} tokens",
            doc.doc_id
        );
    }
    let windows = doc
        .windows
        .iter()
        .map(|w| {
            (
                w.id,
                w.referenced_mentions(),
                w.coref_clusters.as_slice(),
                w.relations.as_slice(),
            )
        })
        .collect();
    let collapse = Collapse::new(&doc.doc_id, &table, windows, long)?;
    Ok(collapse.run(Some((stats, policy))))
}

pub fn build_full_graph(doc: &DocumentRecord, stats: &CorpusStats, policy: MergePolicy) -> Result<KnowledgeGraph> {
    build_full_graph_with_provenance(doc, stats, policy).map(|b| b.graph)
}

/// Target graph from an abstract annotation: coreferent mentions collapse
/// into one node and annotated relations link the nodes. No string merging.
pub fn build_target_graph(doc_id: &str, annotation: &AbstractAnnotation) -> Result<KnowledgeGraph> {
    let table: HashMap<&str, &Mention> = annotation.mentions.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut ids: Vec<&str> = annotation.mentions.iter().map(|m| m.id.as_str()).collect();
    ids.extend(annotation.coref_clusters.iter().flatten().map(String::as_str));
    ids.extend(
        annotation
            .relations
            .iter()
            .flat_map(|r| [r.head.as_str(), r.tail.as_str()]),
    );
    let mut seen = std::collections::HashSet::new();
    ids.retain(|id| seen.insert(*id));
    let windows = vec![(
        0,
        ids,
        annotation.coref_clusters.as_slice(),
        annotation.relations.as_slice(),
    )];
    let collapse = Collapse::new(doc_id, &table, windows, |_| false)?;
    Ok(collapse.run(None).graph)
}

/// The target graph of a document: built from its abstract annotation when
/// present, else the prebuilt `abstract_graph`. Also returns the abstract
/// token count (0 when unknown).
pub fn document_target(doc: &DocumentRecord) -> Result<Option<(KnowledgeGraph, usize)>> {
    if let Some(a) = &doc.abstract_annotation {
        return Ok(Some((build_target_graph(&doc.doc_id, a)?, a.token_count())));
    }
    Ok(doc.abstract_graph.clone().map(|g| (g, 0)))
}

/// How the distinct mention strings of a corpus split at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauSplit {
    pub tau: f64,
    pub generic: usize,
    pub non_generic: usize,
}

/// Generic/non-generic counts over distinct normalized mention strings for
/// each candidate threshold.
pub fn calibrate_tau(docs: &[DocumentRecord], stats: &CorpusStats, taus: &[f64]) -> Vec<TauSplit> {
    let strings: BTreeSet<String> = docs
        .iter()
        .flat_map(|d| d.mentions.iter().map(|m| crate::text::normalize_mention(&m.text)))
        .collect();
    taus.iter()
        .map(|&tau| {
            let s = stats.clone().with_threshold(tau);
            let generic = strings.iter().filter(|m| is_generic_mention(m, &s)).count();
            TauSplit {
                tau,
                generic,
                non_generic: strings.len() - generic,
            }
        })
        .collect()
}
