//! Trains the salience classifier on a synthetic corpus where frequent
//! entities and tasks are salient, then reports training-set entity F1.
//!
//!     cargo run --release --example train_gat [-- steps]

use kgsum::align::{align_graphs, DEFAULT_LAMBDA};
use kgsum::gat::{labels_from_alignment, positive_ordinals, predict, train, GatConfig, GraphInputs, TrainGraph};
use kgsum::ingest::EmbeddingTable;
use kgsum::metrics::{aggregate, score_document, TypeMatch};
use kgsum::synthetic::rule_corpus;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kgsum::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let cfg = GatConfig {
        embed_dim: 64,
        lr: 1e-3,
        max_steps: steps,
        eval_every: 50,
        ..GatConfig::default()
    };
    let table = EmbeddingTable::hashed(cfg.embed_dim);
    let pairs = rule_corpus(&mut ChaCha8Rng::seed_from_u64(1), 30, 12);
    let corpus = pairs
        .iter()
        .map(|(full, target)| {
            let labels = labels_from_alignment(full, target, DEFAULT_LAMBDA);
            Ok(TrainGraph {
                graph: full.clone(),
                inputs: GraphInputs::new(full, &table, &cfg)?,
                positives: positive_ordinals(full, &labels)?,
            })
        })
        .collect::<kgsum::Result<Vec<_>>>()?;

    let out = train(&corpus, None, &cfg, DEFAULT_LAMBDA)?;
    for e in out.log.iter().filter(|e| e.step % 50 == 0 || e.step == 1) {
        println!("step {:>5}  loss {:.4}", e.step, e.loss);
    }
    let mut reports = Vec::new();
    for (g, (_, target)) in corpus.iter().zip(&pairs) {
        let pred = predict(&out.model, &g.graph, &g.inputs)?;
        let alignment = align_graphs(&pred, target, DEFAULT_LAMBDA);
        reports.push(score_document(&alignment, &pred, target, TypeMatch::Any).report());
    }
    let r = aggregate(&reports)?;
    println!(
        "train entity F1 {:.3}, relation F1 {:.3}",
        r.untyped_entity.f1, r.untyped_relation.f1
    );
    Ok(())
}
