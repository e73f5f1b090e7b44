use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::align_graphs;
use crate::baselines::induced_subgraph;
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::metrics::{aggregate, score_document, TypeMatch};

use super::config::{GatConfig, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
use super::model::GatModel;
use super::network::{backward, forward, loss, loss_grad, GraphInputs, Mode};

/// Salience label of one full-graph node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainLabel {
    pub node_id: String,
    pub salient: bool,
}

/// A node is salient when it aligns to some target node.
pub fn labels_from_alignment(full: &KnowledgeGraph, target: &KnowledgeGraph, lambda: f64) -> Vec<TrainLabel> {
    let aligned: HashSet<String> = align_graphs(full, target, lambda)
        .pairs
        .into_iter()
        .map(|p| p.pred)
        .collect();
    full.nodes
        .iter()
        .map(|n| TrainLabel {
            node_id: n.id.clone(),
            salient: aligned.contains(&n.id),
        })
        .collect()
}

/// Ordinals of the salient nodes; unknown node ids are an error.
pub fn positive_ordinals(graph: &KnowledgeGraph, labels: &[TrainLabel]) -> Result<Vec<usize>> {
    let index = graph.index();
    let mut out = Vec::new();
    for l in labels {
        let &i = index
            .get(l.node_id.as_str())
            .ok_or_else(|| Error::UnknownNode(l.node_id.clone()))?;
        if l.salient {
            out.push(i);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// One training graph with its precomputed inputs and salient ordinals.
#[derive(Debug, Clone)]
pub struct TrainGraph {
    pub graph: KnowledgeGraph,
    pub inputs: GraphInputs,
    pub positives: Vec<usize>,
}

/// A development graph, scored against its target during training.
#[derive(Debug, Clone)]
pub struct DevGraph {
    pub graph: KnowledgeGraph,
    pub inputs: GraphInputs,
    pub target: KnowledgeGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: usize,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_typed_relation_f1: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: GatModel,
    pub log: Vec<LogEntry>,
    /// Step whose parameters were kept (0 is the initialization).
    pub selected_step: usize,
}

/// Uniform sample without replacement of `min(ratio * |pos|, available)`
/// non-salient nodes.
pub fn sample_negatives(n: usize, positives: &[usize], ratio: usize, rng: &mut impl RngCore) -> Vec<usize> {
    let pos: HashSet<usize> = positives.iter().copied().collect();
    let pool: Vec<usize> = (0..n).filter(|i| !pos.contains(i)).collect();
    let amount = (ratio * positives.len()).min(pool.len());
    let mut picked: Vec<usize> = index::sample(rng, pool.len(), amount)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    picked.sort_unstable();
    picked
}

/// Loss and gradient of one graph under a fresh negative sample and dropout
/// mask; `None` when no node contributes.
fn graph_step(model: &GatModel, g: &TrainGraph, seed: u64) -> Result<Option<(f64, Vec<f64>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let negatives = sample_negatives(g.inputs.len(), &g.positives, model.config.neg_ratio, &mut rng);
    if g.positives.is_empty() && negatives.is_empty() {
        return Ok(None);
    }
    let pass = forward(model, &g.inputs, Mode::Train(&mut rng))?;
    let l = loss(&pass.probs, &g.positives, &negatives);
    let d = loss_grad(&pass.probs, &g.positives, &negatives);
    Ok(Some((l, backward(model, &g.inputs, &pass, &d))))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// Per-node salience probabilities in evaluation mode.
pub fn predict_probs(model: &GatModel, inputs: &GraphInputs) -> Result<Vec<f64>> {
    Ok(forward(model, inputs, Mode::Eval)?.probs)
}

/// Nodes with probability at least the threshold, plus every edge between them.
pub fn predict(model: &GatModel, graph: &KnowledgeGraph, inputs: &GraphInputs) -> Result<KnowledgeGraph> {
    let probs = predict_probs(model, inputs)?;
    let keep: HashSet<&str> = graph
        .nodes
        .iter()
        .zip(&probs)
        .filter(|(_, &p)| p >= model.config.threshold)
        .map(|(n, _)| n.id.as_str())
        .collect();
    induced_subgraph(graph, &keep)
}

/// Macro-averaged typed relation F1 of the model's predictions.
pub fn dev_typed_relation_f1(model: &GatModel, dev: &[DevGraph], lambda: f64) -> Result<f64> {
    let reports = dev
        .iter()
        .map(|d| {
            let pred = predict(model, &d.graph, &d.inputs)?;
            let al = align_graphs(&pred, &d.target, lambda);
            Ok(score_document(&al, &pred, &d.target, TypeMatch::Any).report())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&reports)?.typed_relation.f1)
}

/// Trains from a seeded initialization. Batches cycle through a reshuffled
/// order; every graph in a batch draws its own seed in order, so the result
/// does not depend on the thread count.
pub fn train(corpus: &[TrainGraph], dev: Option<&[DevGraph]>, cfg: &GatConfig, lambda: f64) -> Result<TrainOutcome> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyInput("training needs at least one graph"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = GatModel::init(cfg, &mut rng);
    let dev = dev.filter(|d| !d.is_empty());
    let mut log = Vec::with_capacity(cfg.max_steps);
    let mut best = match dev {
        Some(d) => Some((dev_typed_relation_f1(&model, d, lambda)?, 0, model.params.clone())),
        None => None,
    };
    let mut adam = Adam::new(model.params.len());
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut cursor = corpus.len();
    let batch = cfg.batch_size.min(corpus.len());

    for step in 1..=cfg.max_steps {
        let mut picked = Vec::with_capacity(batch);
        while picked.len() < batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            picked.push(order[cursor]);
            cursor += 1;
        }
        let seeds: Vec<u64> = picked.iter().map(|_| rng.next_u64()).collect();
        let results = picked
            .par_iter()
            .zip(&seeds)
            .map(|(&g, &seed)| graph_step(&model, &corpus[g], seed))
            .collect::<Result<Vec<_>>>()?;

        let mut grad = vec![0.0; model.params.len()];
        let mut total = 0.0;
        let mut used = 0usize;
        for (l, g) in results.into_iter().flatten() {
            total += l;
            used += 1;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        if used == 0 {
            log.push(LogEntry {
                step,
                loss: 0.0,
                dev_typed_relation_f1: None,
            });
            continue;
        }
        let mean = total / used as f64;
        if !mean.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss(format!("step {step}: loss {mean}")));
        }
        let scale = 1.0 / used as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        adam.step(&mut model.params, &grad, cfg.lr);

        let mut entry = LogEntry {
            step,
            loss: mean,
            dev_typed_relation_f1: None,
        };
        if let (Some(d), Some(b)) = (dev, best.as_mut()) {
            if step % cfg.eval_every == 0 || step == cfg.max_steps {
                let f1 = dev_typed_relation_f1(&model, d, lambda)?;
                entry.dev_typed_relation_f1 = Some(f1);
                log::info!("step {step}: loss {mean:.6}, dev typed relation F1 {f1:.4}");
                if f1 > b.0 {
                    *b = (f1, step, model.params.clone());
                }
            }
        }
        log.push(entry);
    }

    let selected_step = match best {
        Some((_, step, params)) => {
            model.params = params;
            step
        }
        None => cfg.max_steps,
    };
    Ok(TrainOutcome {
        model,
        log,
        selected_step,
    })
}
