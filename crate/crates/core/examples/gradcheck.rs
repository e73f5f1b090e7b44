//! Compares analytic gradients with central differences, then shows the
//! check catching a perturbed backward pass.
//!
//!     cargo run --release --example gradcheck

use kgsum::gat::{grad_check, sample_negatives, BackwardFault, GatConfig, GatModel, GraphInputs};
use kgsum::ingest::EmbeddingTable;
use kgsum::synthetic::random_graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kgsum::Result<()> {
    let cfg = GatConfig {
        embed_dim: 32,
        ..GatConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = GatModel::init(&cfg, &mut rng);
    let table = EmbeddingTable::hashed(cfg.embed_dim);
    let graph = random_graph(&mut rng, "g", 6, 0.3);
    let inputs = GraphInputs::new(&graph, &table, &cfg)?;
    let positives = vec![0, 3];
    let negatives = sample_negatives(6, &positives, cfg.neg_ratio, &mut rng);

    let clean = grad_check(&model, &inputs, &positives, &negatives, 200, 1, None)?;
    println!(
        "clean:  max relative error {:.2e} over {} parameters ({} skipped at ReLU kinks), worst in {}",
        clean.max_rel_error,
        clean.checked,
        clean.skipped_kinks,
        clean.worst_tensor.as_deref().unwrap_or("-")
    );
    let fault = BackwardFault {
        param: model.layout.get("classifier").expect("classifier").offset,
        delta: 1.0,
    };
    let broken = grad_check(&model, &inputs, &positives, &negatives, 200, 1, Some(fault))?;
    println!(
        "faulty: max relative error {:.2e}, worst in {}",
        broken.max_rel_error,
        broken.worst_tensor.as_deref().unwrap_or("-")
    );
    Ok(())
}
