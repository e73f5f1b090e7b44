//! The document record: tokenized sections plus windowed IE output.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{validate_graph, EntityType, KnowledgeGraph, RelationType};

use super::jsonl::parse_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mention {
    pub id: String,
    /// Raw text, equal to the covered tokens joined by single spaces.
    pub text: String,
    /// Document-level token offsets, `[start, end)`.
    pub span: [usize; 2],
    /// Sentence ordinal within the section.
    pub sentence: usize,
    pub section: usize,
    #[serde(rename = "type")]
    pub entity_type: EntityType,
}

impl Mention {
    pub fn start(&self) -> usize {
        self.span[0]
    }

    pub fn end(&self) -> usize {
        self.span[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationMention {
    pub head: String,
    pub tail: String,
    #[serde(rename = "type")]
    pub relation_type: RelationType,
}

/// IE output for one processing chunk of a section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub id: usize,
    pub section: usize,
    /// Inclusive `[first, last]` sentence ordinals within the section.
    pub sentences: [usize; 2],
    #[serde(default)]
    pub mention_ids: Vec<String>,
    #[serde(default)]
    pub coref_clusters: Vec<Vec<String>>,
    #[serde(default)]
    pub relations: Vec<RelationMention>,
}

impl Window {
    /// Every mention id the window refers to, listed or not, in first-seen order.
    pub fn referenced_mentions(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.mention_ids
            .iter()
            .chain(self.coref_clusters.iter().flatten())
            .chain(self.relations.iter().flat_map(|r| [&r.head, &r.tail]))
            .map(String::as_str)
            .filter(|id| seen.insert(*id))
            .collect()
    }
}

/// Abstract-level annotation from which the target graph is built: a single
/// section with one set of coreference clusters and relations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractAnnotation {
    pub sentences: Vec<Vec<String>>,
    #[serde(default)]
    pub mentions: Vec<Mention>,
    #[serde(default)]
    pub coref_clusters: Vec<Vec<String>>,
    #[serde(default)]
    pub relations: Vec<RelationMention>,
}

impl AbstractAnnotation {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    /// Validates mention spans, cluster disjointness and references.
    pub fn validate(&self) -> Result<()> {
        let sections = [self.sentences.clone()];
        let table = check_mentions(&sections, &self.mentions)?;
        check_clusters(&self.coref_clusters, &self.relations, &table, "abstract")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub doc_id: String,
    /// section → sentence → token.
    pub sections: Vec<Vec<Vec<String>>>,
    #[serde(default)]
    pub mentions: Vec<Mention>,
    #[serde(default)]
    pub windows: Vec<Window>,
    #[serde(rename = "abstract", default, skip_serializing_if = "Option::is_none")]
    pub abstract_annotation: Option<AbstractAnnotation>,
    /// Prebuilt target graph; used when no abstract annotation is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstract_graph: Option<KnowledgeGraph>,
}

/// Document-level token offsets of every sentence, `[start, end)`, indexed
/// as `[section][sentence]`.
pub fn sentence_offsets(sections: &[Vec<Vec<String>>]) -> Vec<Vec<(usize, usize)>> {
    let mut offset = 0;
    sections
        .iter()
        .map(|sentences| {
            sentences
                .iter()
                .map(|s| {
                    let range = (offset, offset + s.len());
                    offset += s.len();
                    range
                })
                .collect()
        })
        .collect()
}

impl DocumentRecord {
    pub fn token_count(&self) -> usize {
        self.sections.iter().flatten().map(Vec::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().flatten().flatten().map(String::as_str)
    }

    pub fn sentence_len(&self, section: usize, sentence: usize) -> Option<usize> {
        self.sections.get(section)?.get(sentence).map(Vec::len)
    }

    pub fn mention_table(&self) -> HashMap<&str, &Mention> {
        self.mentions.iter().map(|m| (m.id.as_str(), m)).collect()
    }

    /// Checks every record invariant; returns the first failure.
    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::schema("doc_id", "must be non-empty"));
        }
        let table = check_mentions(&self.sections, &self.mentions)?;
        let mut window_ids = HashSet::new();
        for (wi, w) in self.windows.iter().enumerate() {
            let ctx = format!("windows[{wi}]");
            if !window_ids.insert(w.id) {
                return Err(Error::InvalidRecord(format!("{ctx}: duplicate window id {}", w.id)));
            }
            let Some(section) = self.sections.get(w.section) else {
                return Err(Error::InvalidRecord(format!(
                    "{ctx}: section {} does not exist",
                    w.section
                )));
            };
            let [first, last] = w.sentences;
            if first > last || last >= section.len() {
                return Err(Error::InvalidRecord(format!(
                    "{ctx}: sentence range [{first}, {last}] outside section {} ({} sentences)",
                    w.section,
                    section.len()
                )));
            }
            for id in w.referenced_mentions() {
                let m = table.get(id).ok_or_else(|| Error::UndefinedMention(id.to_string()))?;
                if m.section != w.section || m.sentence < first || m.sentence > last {
                    return Err(Error::InvalidRecord(format!(
                        "{ctx}: mention `{id}` lies outside the window"
                    )));
                }
            }
            check_clusters(&w.coref_clusters, &w.relations, &table, &ctx)?;
        }
        if let Some(a) = &self.abstract_annotation {
            a.validate()
                .map_err(|e| Error::InvalidRecord(format!("abstract: {e}")))?;
        }
        if let Some(g) = &self.abstract_graph {
            if let Some(v) = validate_graph(g).first() {
                return Err(Error::InvalidRecord(format!("abstract_graph: {v}")));
            }
        }
        Ok(())
    }
}

fn check_mentions<'a>(sections: &[Vec<Vec<String>>], mentions: &'a [Mention]) -> Result<HashMap<&'a str, &'a Mention>> {
    let offsets = sentence_offsets(sections);
    let tokens: Vec<&str> = sections.iter().flatten().flatten().map(String::as_str).collect();
    let mut table = HashMap::new();
    for m in mentions {
        let oob = |reason: String| Error::SpanOutOfBounds {
            mention: m.id.clone(),
            start: m.start(),
            end: m.end(),
            reason,
        };
        if m.start() >= m.end() {
            return Err(oob("empty or reversed span".into()));
        }
        if m.end() > tokens.len() {
            return Err(oob(format!("document has {} tokens", tokens.len())));
        }
        let (s_start, s_end) = offsets
            .get(m.section)
            .and_then(|s| s.get(m.sentence))
            .copied()
            .ok_or_else(|| oob(format!("no sentence {} in section {}", m.sentence, m.section)))?;
        if m.start() < s_start || m.end() > s_end {
            return Err(oob(format!(
                "sentence {} of section {} covers [{s_start}, {s_end})",
                m.sentence, m.section
            )));
        }
        let covered = tokens[m.start()..m.end()].join(" ");
        if covered != m.text {
            return Err(Error::InvalidRecord(format!(
                "mention `{}` text {:?} does not match tokens {:?}",
                m.id, m.text, covered
            )));
        }
        if table.insert(m.id.as_str(), m).is_some() {
            return Err(Error::InvalidRecord(format!("duplicate mention id `{}`", m.id)));
        }
    }
    Ok(table)
}

fn check_clusters(
    clusters: &[Vec<String>],
    relations: &[RelationMention],
    table: &HashMap<&str, &Mention>,
    ctx: &str,
) -> Result<()> {
    let mut clustered = HashSet::new();
    for cluster in clusters {
        for id in cluster {
            if !table.contains_key(id.as_str()) {
                return Err(Error::UndefinedMention(id.clone()));
            }
            if !clustered.insert(id.as_str()) {
                return Err(Error::InvalidRecord(format!(
                    "{ctx}: mention `{id}` appears in two coreference clusters"
                )));
            }
        }
    }
    for r in relations {
        for id in [&r.head, &r.tail] {
            if !table.contains_key(id.as_str()) {
                return Err(Error::UndefinedMention(id.clone()));
            }
        }
    }
    Ok(())
}

/// Parses and validates one line of a documents file.
pub fn parse_document_record(line: &[u8]) -> Result<DocumentRecord> {
    let record: DocumentRecord = parse_json(line)?;
    record.validate()?;
    Ok(record)
}

/// Parses and validates one line of a graph file.
pub fn parse_graph(line: &[u8]) -> Result<KnowledgeGraph> {
    let g: KnowledgeGraph = parse_json(line)?;
    g.validated()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    TooFewRelations,
    AbstractTooLong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Drop(DropReason),
}

pub const MIN_TARGET_RELATIONS: usize = 5;
pub const MAX_ABSTRACT_TOKENS: usize = 500;

/// Dataset filter for (document, target) pairs: targets need at least five
/// relation edges and abstracts at most 500 tokens.
pub fn filter_pair(target: &KnowledgeGraph, abstract_token_count: usize) -> FilterDecision {
    if target.edges.len() < MIN_TARGET_RELATIONS {
        FilterDecision::Drop(DropReason::TooFewRelations)
    } else if abstract_token_count > MAX_ABSTRACT_TOKENS {
        FilterDecision::Drop(DropReason::AbstractTooLong)
    } else {
        FilterDecision::Keep
    }
}
