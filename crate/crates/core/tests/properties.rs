mod common;

use std::collections::{BTreeSet, HashSet};

use kgsum::align::{align_graphs, gestalt_similarity, AlignedPair, Alignment};
use kgsum::baselines::{pagerank_scores, pagerank_select, topk_freq_select, BaselineConfig};
use kgsum::build::{build_full_graph, MergePolicy};
use kgsum::gat::{forward, GatConfig, GatModel, GraphInputs, Mode, NUM_HEADS};
use kgsum::ingest::{compute_corpus_stats, parse_document_record, parse_graph, CorpusStats, EmbeddingTable};
use kgsum::kg::{validate_graph, EntityNode, EntityType, KnowledgeGraph, RelationEdge, RelationType};
use kgsum::metrics::{entity_counts, relation_counts, score_document, PrfCounts, TypeMatch};
use kgsum::synthetic::random_graph;
use kgsum::text::normalize_mention;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Graph whose nodes carry short strings over a tiny alphabet, so that
/// alignments are frequent and ties happen.
fn wordy_graph(rng: &mut ChaCha8Rng, doc: &str, n: usize) -> KnowledgeGraph {
    let nodes = (0..n)
        .map(|i| EntityNode {
            id: KnowledgeGraph::node_id(doc, i),
            mentions: (0..rng.random_range(1..=2))
                .map(|_| {
                    (0..rng.random_range(1..=6))
                        .map(|_| ['a', 'b', 'c', ' '][rng.random_range(0..4)])
                        .collect::<String>()
                })
                .map(|s| if s.trim().is_empty() { "a".to_string() } else { s })
                .collect(),
            count: rng.random_range(1..=4),
            entity_type: EntityType::ALL[rng.random_range(0..3)],
            first_section: 0,
        })
        .collect();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for _ in 0..rng.random_range(0..=2 * n) {
        let (s, d) = (rng.random_range(0..n.max(1)), rng.random_range(0..n.max(1)));
        let ty = RelationType::ALL[rng.random_range(0..3)];
        if n > 1 && s != d && seen.insert((s, d, ty)) {
            edges.push(RelationEdge {
                src: KnowledgeGraph::node_id(doc, s),
                dst: KnowledgeGraph::node_id(doc, d),
                relation_type: ty,
                count: 1,
            });
        }
    }
    KnowledgeGraph {
        doc_id: doc.into(),
        nodes,
        edges,
    }
}

fn in_unit(c: &PrfCounts) -> bool {
    [c.precision(), c.recall(), c.f1()]
        .iter()
        .all(|r| (0.0..=1.0).contains(&r.value()))
}

fn pair_set(a: &Alignment) -> BTreeSet<(String, String)> {
    a.pairs.iter().map(|p| (p.pred.clone(), p.target.clone())).collect()
}

proptest! {
    #[test]
    fn gestalt_is_bounded_and_one_only_on_equal(a in "[abAB -]{0,12}", b in "[abAB -]{0,12}") {
        let s = gestalt_similarity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s == 1.0, normalize_mention(&a) == normalize_mention(&b));
        prop_assert_eq!(gestalt_similarity(&a, &a), 1.0);
    }

    #[test]
    fn raising_lambda_never_adds_pairs(seed in any::<u64>(), l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, p) = (wordy_graph(&mut rng, "t", 5), wordy_graph(&mut rng, "p", 6));
        let (lo, hi) = (l1.min(l2), l1.max(l2));
        prop_assert!(pair_set(&align_graphs(&p, &t, hi)).is_subset(&pair_set(&align_graphs(&p, &t, lo))));
    }

    #[test]
    fn alignment_ignores_predicted_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, p) = (wordy_graph(&mut rng, "t", 5), wordy_graph(&mut rng, "p", 6));
        let mut shuffled = p.clone();
        shuffled.nodes.shuffle(&mut rng);
        prop_assert_eq!(pair_set(&align_graphs(&p, &t, 0.7)), pair_set(&align_graphs(&shuffled, &t, 0.7)));
    }

    #[test]
    fn scores_are_bounded_and_typed_never_beats_untyped(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nt = rng.random_range(0..=6);
        let np = rng.random_range(0..=8);
        let (t, p) = (wordy_graph(&mut rng, "t", nt), wordy_graph(&mut rng, "p", np));
        let al = align_graphs(&p, &t, 0.5);
        let d = score_document(&al, &p, &t, TypeMatch::Any);
        for c in [&d.untyped_entity, &d.typed_entity, &d.untyped_relation, &d.typed_relation] {
            prop_assert!(in_unit(c));
        }
        if d.duplication.den > 0 {
            prop_assert!(d.duplication.value() >= 1.0);
        }
        let all = entity_counts(&al, &p, &t, Some(TypeMatch::All));
        for typed in [d.typed_entity, all] {
            prop_assert!(typed.precision().value() <= d.untyped_entity.precision().value());
            prop_assert!(typed.recall().value() <= d.untyped_entity.recall().value());
            prop_assert!(typed.f1().value() <= d.untyped_entity.f1().value());
        }
    }

    #[test]
    fn unaligned_prediction_never_raises_precision(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nt = rng.random_range(1..=6);
        let np = rng.random_range(0..=7);
        let (t, p) = (wordy_graph(&mut rng, "t", nt), wordy_graph(&mut rng, "p", np));
        let al = align_graphs(&p, &t, 0.5);
        let mut grown = p.clone();
        grown.nodes.push(EntityNode {
            id: KnowledgeGraph::node_id("p", np),
            mentions: vec!["zzzzzzzz".into()],
            count: 1,
            entity_type: EntityType::Task,
            first_section: 0,
        });
        let mut al2 = al.clone();
        al2.pairs.retain(|x: &AlignedPair| x.pred != KnowledgeGraph::node_id("p", np));
        for typed in [None, Some(TypeMatch::Any), Some(TypeMatch::All)] {
            let before = entity_counts(&al, &p, &t, typed);
            let after = entity_counts(&al2, &grown, &t, typed);
            prop_assert!(after.precision().value() <= before.precision().value());
            prop_assert_eq!(after.recall(), before.recall());
        }
        for typed in [false, true] {
            prop_assert_eq!(relation_counts(&al2, &grown, &t, typed), relation_counts(&al, &p, &t, typed));
        }
    }

    #[test]
    fn pagerank_is_a_distribution(seed in any::<u64>(), n in 1usize..40, prob in 0.0f64..0.3, directed in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, "g", n, prob);
        let cfg = BaselineConfig { pagerank_directed: directed, ..Default::default() };
        let r = pagerank_scores(&g, &cfg.pagerank_params()).unwrap();
        prop_assert!(r.iter().all(|&x| x >= 0.0));
        prop_assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn selectors_respect_k_and_produce_valid_graphs(seed in any::<u64>(), n in 1usize..30, k in 1usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, "g", n, 0.2);
        let cfg = BaselineConfig { k, ..Default::default() };
        for sel in [pagerank_select(&g, &cfg).unwrap(), topk_freq_select(&g, &cfg).unwrap()] {
            prop_assert_eq!(sel.nodes.len(), k.min(n));
            prop_assert!(validate_graph(&sel).is_empty());
        }
    }

    #[test]
    fn graph_json_round_trips(seed in any::<u64>(), n in 0usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, "rt", n, 0.3);
        let line = serde_json::to_string(&g).unwrap();
        prop_assert_eq!(parse_graph(line.as_bytes()).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn document_json_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let doc = common::random_document(&mut rng, "rt", 3);
        let line = serde_json::to_string(&doc).unwrap();
        prop_assert_eq!(parse_document_record(line.as_bytes()).unwrap(), doc);
    }

    #[test]
    fn built_graphs_are_valid_and_count_every_occurrence_once(seed in any::<u64>(), unique in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs: Vec<_> = (0..4).map(|k| common::random_document(&mut rng, &format!("d{k}"), 3)).collect();
        let stats = compute_corpus_stats(&docs, 2.0).unwrap();
        let policy = if unique { MergePolicy::UniquePair } else { MergePolicy::Transitive };
        for doc in &docs {
            let g = build_full_graph(doc, &stats, policy).unwrap();
            prop_assert!(validate_graph(&g).is_empty());
            let spans: HashSet<[usize; 2]> = doc.mentions.iter().map(|m| m.span).collect();
            prop_assert!(g.nodes.len() <= spans.len());
            prop_assert_eq!(g.nodes.iter().map(|n| n.count as usize).sum::<usize>(), spans.len());
        }
    }

    #[test]
    fn corpus_stats_merge_like_a_fold(seed in any::<u64>(), split in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let docs: Vec<_> = (0..6).map(|k| common::random_document(&mut rng, &format!("d{k}"), 2)).collect();
        let whole = compute_corpus_stats(&docs, 2.0).unwrap();
        let mut left = CorpusStats::new(2.0);
        docs[..split].iter().for_each(|d| left.add_document(d));
        let mut right = CorpusStats::new(2.0);
        docs[split..].iter().for_each(|d| right.add_document(d));
        prop_assert_eq!(left.merge(right), whole);
    }

    #[test]
    fn gat_is_permutation_equivariant(seed in any::<u64>(), n in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GatConfig { embed_dim: 8, num_layers: 3, ..Default::default() };
        let model = GatModel::init(&cfg, &mut rng);
        let table = EmbeddingTable::hashed(cfg.embed_dim);
        let g = random_graph(&mut rng, "g", n, 0.35);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // node i of `g` becomes node perm[i] of `h`
        let mut nodes = g.nodes.clone();
        for (i, node) in g.nodes.iter().enumerate() {
            nodes[perm[i]] = EntityNode { id: KnowledgeGraph::node_id("g", perm[i]), ..node.clone() };
        }
        let ix = g.index();
        let edges = g
            .edges
            .iter()
            .map(|e| RelationEdge {
                src: KnowledgeGraph::node_id("g", perm[ix[e.src.as_str()]]),
                dst: KnowledgeGraph::node_id("g", perm[ix[e.dst.as_str()]]),
                ..e.clone()
            })
            .collect();
        let h = KnowledgeGraph { doc_id: "g".into(), nodes, edges }.canonicalized();
        let a = forward(&model, &GraphInputs::new(&g, &table, &cfg).unwrap(), Mode::Eval).unwrap();
        let b = forward(&model, &GraphInputs::new(&h, &table, &cfg).unwrap(), Mode::Eval).unwrap();
        for (i, &pi) in perm.iter().enumerate() {
            prop_assert!((a.probs[i] - b.probs[pi]).abs() <= 1e-12);
            for j in 0..cfg.hidden_dim {
                prop_assert!((a.hidden()[[i, j]] - b.hidden()[[pi, j]]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn attention_is_a_distribution_over_typed_neighbors(seed in any::<u64>(), n in 1usize..9, directed in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = GatConfig { embed_dim: 8, num_layers: 2, directed_attention: directed, ..Default::default() };
        let model = GatModel::init(&cfg, &mut rng);
        let g = random_graph(&mut rng, "g", n, 0.4);
        let inputs = GraphInputs::new(&g, &EmbeddingTable::hashed(8), &cfg).unwrap();
        let pass = forward(&model, &inputs, Mode::Eval).unwrap();
        for layer in 0..cfg.num_layers {
            for head in 0..NUM_HEADS {
                for node in 0..n {
                    let alpha = pass.attention(layer, head, node);
                    prop_assert_eq!(alpha.len(), inputs.neighbors[head][node].len());
                    prop_assert!(alpha.iter().all(|&a| a >= 0.0));
                    if !alpha.is_empty() {
                        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}
