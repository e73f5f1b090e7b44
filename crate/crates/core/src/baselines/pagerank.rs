use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

/// Power-iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Walk along edge direction only; otherwise weights are symmetrized.
    pub directed: bool,
}

/// Sparse weighted adjacency: `out[u]` lists `(v, weight)` with weights
/// summed over parallel edges.
pub(crate) fn weighted_adjacency(g: &KnowledgeGraph, directed: bool) -> Vec<Vec<(usize, f64)>> {
    let n = g.nodes.len();
    let mut dense: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for (s, d, e) in g.indexed_edges() {
        let w = f64::from(e.count);
        *dense[s].entry(d).or_insert(0.0) += w;
        if !directed {
            *dense[d].entry(s).or_insert(0.0) += w;
        }
    }
    dense.into_iter().map(|m| m.into_iter().collect()).collect()
}

/// PageRank scores in node order. Rank mass of nodes without out-weight is
/// spread uniformly. Iterates until the L1 change drops below `tol` or
/// `max_iter` is reached.
pub fn pagerank_scores(g: &KnowledgeGraph, params: &PageRankParams) -> Result<Vec<f64>> {
    let n = g.nodes.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let adj = weighted_adjacency(g, params.directed);
    let out_weight: Vec<f64> = adj.iter().map(|l| l.iter().map(|(_, w)| w).sum()).collect();
    let d = params.damping;
    let nf = n as f64;

    let mut rank = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    for _ in 0..params.max_iter {
        let dangling: f64 = rank
            .iter()
            .zip(&out_weight)
            .filter(|(_, &w)| w <= 0.0)
            .map(|(r, _)| r)
            .sum();
        let base = (1.0 - d) / nf + d * dangling / nf;
        next.iter_mut().for_each(|x| *x = base);
        for (u, edges) in adj.iter().enumerate() {
            if out_weight[u] <= 0.0 {
                continue;
            }
            let share = d * rank[u] / out_weight[u];
            for &(v, w) in edges {
                next[v] += share * w;
            }
        }
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < params.tol {
            break;
        }
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{EntityNode, EntityType, RelationEdge, RelationType};

    fn graph(n: usize, edges: &[(usize, usize, u32)]) -> KnowledgeGraph {
        KnowledgeGraph {
            doc_id: "g".into(),
            nodes: (0..n)
                .map(|i| EntityNode {
                    id: format!("g:{i}"),
                    mentions: vec![format!("n{i}")],
                    count: 1,
                    entity_type: EntityType::Method,
                    first_section: 0,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|&(s, d, c)| RelationEdge {
                    src: format!("g:{s}"),
                    dst: format!("g:{d}"),
                    relation_type: RelationType::UsedFor,
                    count: c,
                })
                .collect(),
        }
    }

    const PARAMS: PageRankParams = PageRankParams {
        damping: 0.85,
        tol: 1e-12,
        max_iter: 1000,
        directed: false,
    };

    #[test]
    fn two_nodes_split_evenly() {
        let r = pagerank_scores(&graph(2, &[(0, 1, 1)]), &PARAMS).unwrap();
        assert_eq!(r, vec![0.5, 0.5]);
    }

    #[test]
    fn isolated_node_fixed_point() {
        // r_c = (1 - d)/3 + d r_c / 3  =>  r_c = (1 - d) / (3 - d)
        let r = pagerank_scores(&graph(3, &[(0, 1, 2)]), &PARAMS).unwrap();
        let expected = 0.15 / (3.0 - 0.85);
        assert!((r[2] - expected).abs() < 1e-12);
        assert!((r[0] - (1.0 - expected) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn hub_ranks_highest() {
        let r = pagerank_scores(&graph(5, &[(0, 1, 1), (0, 2, 1), (0, 3, 1), (0, 4, 1)]), &PARAMS).unwrap();
        assert!(r[1..].iter().all(|&x| r[0] > x));
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_graph_is_error() {
        assert!(matches!(
            pagerank_scores(&graph(0, &[]), &PARAMS),
            Err(Error::EmptyGraph)
        ));
    }
}
