//! Entity salience, relation salience and duplication scores computed from
//! an [`Alignment`].
//!
//! Predicted nodes aligned to the same target are collapsed into one before
//! counting, so a target is matched at most once. Scores are kept as integer
//! ratios until the final division, which makes them reproducible exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::align::Alignment;
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, RelationType};

/// Non-negative rational with the convention `x / 0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    pub fn value(self) -> f64 {
        if self.den == 0 {
            0.0
        } else {
            self.num as f64 / self.den as f64
        }
    }
}

/// Matched and total counts on both sides of a precision/recall pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PrfCounts {
    pub matched_pred: u64,
    pub pred_total: u64,
    pub matched_target: u64,
    pub target_total: u64,
}

impl PrfCounts {
    pub fn precision(&self) -> Ratio {
        Ratio::new(self.matched_pred, self.pred_total)
    }

    pub fn recall(&self) -> Ratio {
        Ratio::new(self.matched_target, self.target_total)
    }

    /// `2PR / (P + R)` as a single ratio: with P = a/b and R = c/d this is
    /// `2ac / (ad + bc)`.
    pub fn f1(&self) -> Ratio {
        let (p, r) = (self.precision(), self.recall());
        if p.den == 0 || r.den == 0 || (p.num == 0 && r.num == 0) {
            return Ratio::new(0, 1);
        }
        Ratio::new(2 * p.num * r.num, p.num * r.den + p.den * r.num)
    }

    pub fn prf(&self) -> Prf {
        Prf {
            precision: self.precision().value(),
            recall: self.recall().value(),
            f1: self.f1().value(),
        }
    }

    fn add(self, o: PrfCounts) -> PrfCounts {
        PrfCounts {
            matched_pred: self.matched_pred + o.matched_pred,
            pred_total: self.pred_total + o.pred_total,
            matched_target: self.matched_target + o.matched_target,
            target_total: self.target_total + o.target_total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// The thirteen reported numbers for one document or a whole corpus.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub untyped_entity: Prf,
    pub typed_entity: Prf,
    pub untyped_relation: Prf,
    pub typed_relation: Prf,
    /// `None` when no target node is aligned.
    pub duplication: Option<f64>,
}

/// How typed entity matching treats a collapsed group of predicted nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeMatch {
    /// Some aligned predicted node carries the target's type.
    #[default]
    Any,
    /// Every aligned predicted node carries the target's type.
    All,
}

impl FromStr for TypeMatch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any" => Ok(TypeMatch::Any),
            "all" => Ok(TypeMatch::All),
            _ => Err(Error::Config(format!("unknown type-match mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Average {
    #[default]
    Macro,
    Micro,
}

impl FromStr for Average {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(Average::Macro),
            "micro" => Ok(Average::Micro),
            _ => Err(Error::Config(format!("unknown averaging mode `{s}`"))),
        }
    }
}

/// Identity of a predicted node after collapsing: its aligned target, or
/// itself when unaligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Collapsed {
    Target(usize),
    Pred(usize),
}

/// Per predicted node, the ordinal of its aligned target.
fn aligned_targets(alignment: &Alignment, predicted: &KnowledgeGraph, target: &KnowledgeGraph) -> Vec<Option<usize>> {
    let target_index = target.index();
    let by_pred: HashMap<&str, &str> = alignment
        .pairs
        .iter()
        .map(|p| (p.pred.as_str(), p.target.as_str()))
        .collect();
    predicted
        .nodes
        .iter()
        .map(|n| by_pred.get(n.id.as_str()).and_then(|t| target_index.get(t).copied()))
        .collect()
}

fn collapse_keys(aligned: &[Option<usize>]) -> Vec<Collapsed> {
    aligned
        .iter()
        .enumerate()
        .map(|(p, t)| t.map_or(Collapsed::Pred(p), Collapsed::Target))
        .collect()
}

/// `typed` is `None` for untyped scoring.
pub fn entity_counts(
    alignment: &Alignment,
    predicted: &KnowledgeGraph,
    target: &KnowledgeGraph,
    typed: Option<TypeMatch>,
) -> PrfCounts {
    let aligned = aligned_targets(alignment, predicted, target);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut unaligned = 0u64;
    for (p, t) in aligned.iter().enumerate() {
        match t {
            Some(t) => groups.entry(*t).or_default().push(p),
            None => unaligned += 1,
        }
    }
    let matched = groups
        .iter()
        .filter(|(&t, preds)| match typed {
            None => true,
            Some(mode) => {
                let want = target.nodes[t].entity_type;
                let mut types = preds.iter().map(|&p| predicted.nodes[p].entity_type);
                match mode {
                    TypeMatch::Any => types.any(|ty| ty == want),
                    TypeMatch::All => types.all(|ty| ty == want),
                }
            }
        })
        .count() as u64;
    PrfCounts {
        matched_pred: matched,
        pred_total: unaligned + groups.len() as u64,
        matched_target: matched,
        target_total: target.nodes.len() as u64,
    }
}

pub fn entity_scores(alignment: &Alignment, predicted: &KnowledgeGraph, target: &KnowledgeGraph, typed: bool) -> Prf {
    entity_counts(alignment, predicted, target, typed.then_some(TypeMatch::Any)).prf()
}

/// Untyped: undirected node pairs with multiplicity and type merged.
/// Typed: directed `(src, dst, type)` triples.
pub fn relation_counts(
    alignment: &Alignment,
    predicted: &KnowledgeGraph,
    target: &KnowledgeGraph,
    typed: bool,
) -> PrfCounts {
    let keys = collapse_keys(&aligned_targets(alignment, predicted, target));
    let unit = |a: Collapsed, b: Collapsed, ty: RelationType| {
        if typed {
            (a, b, Some(ty))
        } else {
            (a.min(b), a.max(b), None)
        }
    };
    let pred_units: BTreeSet<_> = predicted
        .indexed_edges()
        .into_iter()
        .map(|(s, d, e)| unit(keys[s], keys[d], e.relation_type))
        .collect();
    let target_units: BTreeSet<_> = target
        .indexed_edges()
        .into_iter()
        .map(|(s, d, e)| unit(Collapsed::Target(s), Collapsed::Target(d), e.relation_type))
        .collect();
    let matched = target_units.intersection(&pred_units).count() as u64;
    PrfCounts {
        matched_pred: matched,
        pred_total: pred_units.len() as u64,
        matched_target: matched,
        target_total: target_units.len() as u64,
    }
}

pub fn relation_scores(alignment: &Alignment, predicted: &KnowledgeGraph, target: &KnowledgeGraph, typed: bool) -> Prf {
    relation_counts(alignment, predicted, target, typed).prf()
}

/// Aligned predicted nodes over aligned target nodes.
pub fn duplication_ratio(alignment: &Alignment, target: &KnowledgeGraph) -> Ratio {
    let index = target.index();
    let mut sizes: BTreeMap<usize, u64> = BTreeMap::new();
    for p in &alignment.pairs {
        if let Some(&t) = index.get(p.target.as_str()) {
            *sizes.entry(t).or_insert(0) += 1;
        }
    }
    Ratio::new(sizes.values().sum(), sizes.len() as u64)
}

/// Mean number of predicted nodes per aligned target; `None` when nothing aligned.
pub fn duplication_rate(alignment: &Alignment, target: &KnowledgeGraph) -> Option<f64> {
    let r = duplication_ratio(alignment, target);
    (r.den > 0).then(|| r.value())
}

/// Exact counts behind one document's [`MetricsReport`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentScores {
    pub doc_id: String,
    pub untyped_entity: PrfCounts,
    pub typed_entity: PrfCounts,
    pub untyped_relation: PrfCounts,
    pub typed_relation: PrfCounts,
    pub duplication: Ratio,
}

impl DocumentScores {
    pub fn report(&self) -> MetricsReport {
        MetricsReport {
            untyped_entity: self.untyped_entity.prf(),
            typed_entity: self.typed_entity.prf(),
            untyped_relation: self.untyped_relation.prf(),
            typed_relation: self.typed_relation.prf(),
            duplication: (self.duplication.den > 0).then(|| self.duplication.value()),
        }
    }
}

pub fn score_document(
    alignment: &Alignment,
    predicted: &KnowledgeGraph,
    target: &KnowledgeGraph,
    type_match: TypeMatch,
) -> DocumentScores {
    DocumentScores {
        doc_id: target.doc_id.clone(),
        untyped_entity: entity_counts(alignment, predicted, target, None),
        typed_entity: entity_counts(alignment, predicted, target, Some(type_match)),
        untyped_relation: relation_counts(alignment, predicted, target, false),
        typed_relation: relation_counts(alignment, predicted, target, true),
        duplication: duplication_ratio(alignment, target),
    }
}

/// Macro average over documents. F1 is the mean of per-document F1 values;
/// duplication is averaged over the documents where it is defined.
pub fn aggregate(reports: &[MetricsReport]) -> Result<MetricsReport> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("aggregate needs at least one report"));
    }
    let n = reports.len() as f64;
    let mean_prf = |get: fn(&MetricsReport) -> Prf| {
        let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
        for rep in reports {
            let x = get(rep);
            p += x.precision;
            r += x.recall;
            f += x.f1;
        }
        Prf {
            precision: p / n,
            recall: r / n,
            f1: f / n,
        }
    };
    let dups: Vec<f64> = reports.iter().filter_map(|r| r.duplication).collect();
    Ok(MetricsReport {
        untyped_entity: mean_prf(|r| r.untyped_entity),
        typed_entity: mean_prf(|r| r.typed_entity),
        untyped_relation: mean_prf(|r| r.untyped_relation),
        typed_relation: mean_prf(|r| r.typed_relation),
        duplication: (!dups.is_empty()).then(|| dups.iter().sum::<f64>() / dups.len() as f64),
    })
}

/// Micro average: counts are summed over documents before dividing.
pub fn aggregate_micro(scores: &[DocumentScores]) -> Result<MetricsReport> {
    let first = scores
        .first()
        .ok_or(Error::EmptyInput("aggregate needs at least one report"))?;
    let total = scores[1..].iter().fold(first.clone(), |acc, s| DocumentScores {
        doc_id: acc.doc_id,
        untyped_entity: acc.untyped_entity.add(s.untyped_entity),
        typed_entity: acc.typed_entity.add(s.typed_entity),
        untyped_relation: acc.untyped_relation.add(s.untyped_relation),
        typed_relation: acc.typed_relation.add(s.typed_relation),
        duplication: Ratio::new(
            acc.duplication.num + s.duplication.num,
            acc.duplication.den + s.duplication.den,
        ),
    });
    Ok(total.report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{align_graphs, AlignedPair};
    use crate::kg::{EntityNode, EntityType, RelationEdge};

    fn node(id: &str, ty: EntityType) -> EntityNode {
        EntityNode {
            id: id.into(),
            mentions: vec![id.into()],
            count: 1,
            entity_type: ty,
            first_section: 0,
        }
    }

    fn edge(src: &str, dst: &str, ty: RelationType) -> RelationEdge {
        RelationEdge {
            src: src.into(),
            dst: dst.into(),
            relation_type: ty,
            count: 1,
        }
    }

    fn alignment(pairs: &[(&str, &str)]) -> Alignment {
        Alignment {
            doc_id: "d".into(),
            pairs: pairs
                .iter()
                .map(|(p, t)| AlignedPair {
                    pred: p.to_string(),
                    target: t.to_string(),
                    score: 1.0,
                })
                .collect(),
            lambda: 0.7,
        }
    }

    fn graph(nodes: Vec<EntityNode>, edges: Vec<RelationEdge>) -> KnowledgeGraph {
        KnowledgeGraph {
            doc_id: "d".into(),
            nodes,
            edges,
        }
    }

    use EntityType::{Method, Task};
    use RelationType::UsedFor;

    #[test]
    fn collapsed_entity_counts() {
        let target = graph(vec![node("A", Method), node("B", Method), node("C", Method)], vec![]);
        let pred = graph(
            vec![
                node("a1", Method),
                node("a2", Method),
                node("b", Method),
                node("x", Method),
            ],
            vec![],
        );
        let al = alignment(&[("a1", "A"), ("a2", "A"), ("b", "B")]);
        let prf = entity_scores(&al, &pred, &target, false);
        assert_eq!(prf.precision, 2.0 / 3.0);
        assert_eq!(prf.recall, 2.0 / 3.0);
        assert_eq!(prf.f1, 2.0 / 3.0);
        assert_eq!(duplication_rate(&al, &target), Some(1.5));
    }

    #[test]
    fn identical_graphs_score_one() {
        let g = graph(vec![node("a", Method), node("b", Task)], vec![edge("a", "b", UsedFor)]);
        let al = align_graphs(&g, &g, 0.7);
        let r = score_document(&al, &g, &g, TypeMatch::Any).report();
        for prf in [r.untyped_entity, r.typed_entity, r.untyped_relation, r.typed_relation] {
            assert_eq!(
                prf,
                Prf {
                    precision: 1.0,
                    recall: 1.0,
                    f1: 1.0
                }
            );
        }
        assert_eq!(r.duplication, Some(1.0));
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let target = graph(vec![node("A", Method)], vec![]);
        let pred = graph(vec![], vec![]);
        let r = score_document(&alignment(&[]), &pred, &target, TypeMatch::Any).report();
        assert_eq!(r.untyped_entity, Prf::default());
        assert_eq!(r.duplication, None);
    }

    #[test]
    fn relation_direction_only_matters_when_typed() {
        let target = graph(vec![node("A", Method), node("B", Task)], vec![edge("A", "B", UsedFor)]);
        let al = alignment(&[("a", "A"), ("b", "B")]);
        let forward = graph(vec![node("a", Method), node("b", Task)], vec![edge("a", "b", UsedFor)]);
        let backward = graph(vec![node("a", Method), node("b", Task)], vec![edge("b", "a", UsedFor)]);
        assert_eq!(relation_scores(&al, &forward, &target, true).f1, 1.0);
        assert_eq!(relation_scores(&al, &backward, &target, true).f1, 0.0);
        assert_eq!(relation_scores(&al, &backward, &target, false).f1, 1.0);
    }

    #[test]
    fn duplicate_predicted_edges_collapse() {
        let target = graph(vec![node("A", Method), node("B", Task)], vec![edge("A", "B", UsedFor)]);
        let pred = graph(
            vec![node("a1", Method), node("a2", Method), node("b", Task)],
            vec![edge("a1", "b", UsedFor), edge("a2", "b", UsedFor)],
        );
        let al = alignment(&[("a1", "A"), ("a2", "A"), ("b", "B")]);
        let c = relation_counts(&al, &pred, &target, true);
        assert_eq!((c.matched_pred, c.pred_total), (1, 1));
        let c = relation_counts(&al, &pred, &target, false);
        assert_eq!((c.matched_pred, c.pred_total), (1, 1));
    }

    #[test]
    fn typed_match_modes() {
        let target = graph(vec![node("A", Method)], vec![]);
        let pred = graph(vec![node("a1", Method), node("a2", Task)], vec![]);
        let al = alignment(&[("a1", "A"), ("a2", "A")]);
        assert_eq!(entity_counts(&al, &pred, &target, Some(TypeMatch::Any)).matched_pred, 1);
        assert_eq!(entity_counts(&al, &pred, &target, Some(TypeMatch::All)).matched_pred, 0);
    }

    #[test]
    fn macro_aggregate() {
        let mut a = MetricsReport::default();
        a.untyped_entity.f1 = 0.2;
        a.duplication = Some(1.0);
        let mut b = MetricsReport::default();
        b.untyped_entity.f1 = 0.4;
        let agg = aggregate(&[a, b]).unwrap();
        assert!((agg.untyped_entity.f1 - 0.3).abs() < 1e-15);
        assert_eq!(agg.duplication, Some(1.0));
        assert_eq!(aggregate(&[a]).unwrap(), a);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn f1_ratio_matches_formula() {
        let c = PrfCounts {
            matched_pred: 2,
            pred_total: 3,
            matched_target: 2,
            target_total: 5,
        };
        let (p, r) = (2.0 / 3.0, 2.0 / 5.0);
        assert!((c.f1().value() - 2.0 * p * r / (p + r)).abs() < 1e-15);
    }
}
