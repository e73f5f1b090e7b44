//! Forward pass, loss and hand-written reverse pass of the classifier.

use std::collections::BTreeSet;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::ingest::EmbeddingTable;
use crate::kg::KnowledgeGraph;

use super::config::{GatConfig, NUM_HEADS};
use super::model::{mat, mat_mut, vector, GatModel, LayerOffsets, Layout};

/// Probability clamp inside the logarithms of the loss.
pub const PROB_EPS: f64 = 1e-12;

/// Everything the network reads from one graph, precomputed once.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInputs {
    /// Mention-count feature per node (raw or `ln(1 + n)`).
    pub count: Vec<f64>,
    /// Section bucket, already clamped to the one-hot width.
    pub section: Vec<usize>,
    pub entity_type: Vec<usize>,
    /// `N x embed_dim` embeddings of each node's longest mention.
    pub embedding: Array2<f64>,
    /// `neighbors[r][i]`: sorted typed neighborhood of node `i` for head `r`.
    pub neighbors: Vec<Vec<Vec<usize>>>,
}

impl GraphInputs {
    pub fn new(graph: &KnowledgeGraph, table: &EmbeddingTable, cfg: &GatConfig) -> Result<Self> {
        if table.dimension != cfg.embed_dim {
            return Err(Error::Shape(format!(
                "embedding table has dimension {}, model expects {}",
                table.dimension, cfg.embed_dim
            )));
        }
        let n = graph.nodes.len();
        let mut embedding = Array2::zeros((n, cfg.embed_dim));
        for (i, node) in graph.nodes.iter().enumerate() {
            let v = table.lookup(node.longest_mention())?;
            embedding.row_mut(i).assign(&ArrayView1::from(&v[..]));
        }
        let mut sets = vec![vec![BTreeSet::new(); n]; NUM_HEADS];
        for (s, d, e) in graph.indexed_edges() {
            let r = e.relation_type.ordinal();
            if s != d {
                sets[r][s].insert(d);
                if !cfg.directed_attention {
                    sets[r][d].insert(s);
                }
            }
        }
        Ok(GraphInputs {
            count: graph
                .nodes
                .iter()
                .map(|n| {
                    let c = f64::from(n.count);
                    if cfg.log_count {
                        c.ln_1p()
                    } else {
                        c
                    }
                })
                .collect(),
            section: graph
                .nodes
                .iter()
                .map(|n| n.first_section.min(cfg.num_sections - 1))
                .collect(),
            entity_type: graph.nodes.iter().map(|n| n.entity_type.ordinal()).collect(),
            embedding,
            neighbors: sets
                .into_iter()
                .map(|head| head.into_iter().map(|s| s.into_iter().collect()).collect())
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count.is_empty()
    }
}

/// Whether dropout is active, and the generator that draws its masks.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

#[derive(Debug, Clone)]
struct HeadCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights of node `i` over its neighborhood, in neighbor order.
    alpha: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    heads: Vec<HeadCache>,
    concat: Array2<f64>,
    pre: Array2<f64>,
    /// Inverted-dropout multipliers (0 or `1 / (1 - p)`).
    mask: Option<Array2<f64>>,
}

/// Intermediate values of one forward pass, kept for the reverse pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    layers: Vec<LayerCache>,
    hidden: Array2<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardPass {
    /// Node embeddings before the first attention layer.
    pub fn embeddings(&self) -> ArrayView2<'_, f64> {
        match self.layers.first() {
            Some(l) => l.input.view(),
            None => self.hidden.view(),
        }
    }

    /// Output of the last attention layer.
    pub fn hidden(&self) -> ArrayView2<'_, f64> {
        self.hidden.view()
    }

    /// Attention weights of `node` in `layer` for relation head `head`.
    pub fn attention(&self, layer: usize, head: usize, node: usize) -> &[f64] {
        &self.layers[layer].heads[head].alpha[node]
    }

    /// Signs of every ReLU pre-activation, to detect kinks between passes.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.layers
            .iter()
            .flat_map(|l| l.pre.iter().map(|&z| z > 0.0))
            .collect()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_inputs(model: &GatModel, inputs: &GraphInputs) -> Result<()> {
    let n = inputs.len();
    let ok = inputs.section.len() == n
        && inputs.entity_type.len() == n
        && inputs.embedding.dim() == (n, model.config.embed_dim)
        && inputs.neighbors.len() == NUM_HEADS
        && inputs
            .neighbors
            .iter()
            .all(|h| h.len() == n && h.iter().flatten().all(|&j| j < n))
        && inputs.section.iter().all(|&s| s < model.config.num_sections)
        && inputs.entity_type.iter().all(|&t| t < super::config::NUM_TYPES);
    if ok {
        Ok(())
    } else {
        Err(Error::Shape("graph inputs do not match the model configuration".into()))
    }
}

/// Initial node vectors: `count * n + W_s s + W_t t + W_e S(z)`.
pub fn embed_nodes(model: &GatModel, inputs: &GraphInputs) -> Result<Array2<f64>> {
    check_inputs(model, inputs)?;
    Ok(embed_unchecked(&model.layout, &model.params, inputs))
}

fn embed_unchecked(layout: &Layout, p: &[f64], inputs: &GraphInputs) -> Array2<f64> {
    let h = layout.h;
    let count = vector(p, layout.count, h);
    let ws = mat(p, layout.section, h, layout.num_sections);
    let wt = mat(p, layout.entity_type, h, super::config::NUM_TYPES);
    let we = mat(p, layout.embed, h, layout.embed_dim);
    let mut x = inputs.embedding.dot(&we.t());
    for (i, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
        row.scaled_add(inputs.count[i], &count);
        row += &ws.column(inputs.section[i]);
        row += &wt.column(inputs.entity_type[i]);
    }
    x
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

fn layer_forward(
    off: &LayerOffsets,
    h: usize,
    p: &[f64],
    inputs: &GraphInputs,
    x: Array2<f64>,
    dropout: f64,
    mode: &mut Mode<'_>,
) -> (Array2<f64>, LayerCache) {
    let n = x.nrows();
    let mut concat = Array2::zeros((n, NUM_HEADS * h));
    let mut heads = Vec::with_capacity(NUM_HEADS);
    for r in 0..NUM_HEADS {
        let q = x.dot(&mat(p, off.query[r], h, h).t());
        let k = x.dot(&mat(p, off.key[r], h, h).t());
        let v = x.dot(&mat(p, off.value[r], h, h).t());
        let mut alpha = Vec::with_capacity(n);
        for i in 0..n {
            let nbrs = &inputs.neighbors[r][i];
            let mut out = concat.slice_mut(s![i, r * h..(r + 1) * h]);
            out.assign(&x.row(i));
            if nbrs.is_empty() {
                alpha.push(Vec::new());
                continue;
            }
            let scores: Vec<f64> = nbrs.iter().map(|&j| k.row(j).dot(&q.row(i))).collect();
            let a = softmax(&scores);
            for (&j, &w) in nbrs.iter().zip(&a) {
                out.scaled_add(w, &v.row(j));
            }
            alpha.push(a);
        }
        heads.push(HeadCache { q, k, v, alpha });
    }
    let mut pre = concat.dot(&mat(p, off.out, h, NUM_HEADS * h).t());
    pre += &vector(p, off.out_bias, h);
    let mut y = pre.mapv(|z| z.max(0.0));
    let mask = match mode {
        Mode::Train(rng) if dropout > 0.0 => {
            let keep = 1.0 / (1.0 - dropout);
            let m = Array2::from_shape_simple_fn((n, h), || if rng.random::<f64>() < dropout { 0.0 } else { keep });
            y *= &m;
            Some(m)
        }
        _ => None,
    };
    (
        y,
        LayerCache {
            input: x,
            heads,
            concat,
            pre,
            mask,
        },
    )
}

/// One relation-typed attention layer applied to `x` (`N x h`).
pub fn attention_layer(
    model: &GatModel,
    inputs: &GraphInputs,
    layer: usize,
    x: ArrayView2<'_, f64>,
    mut mode: Mode<'_>,
) -> Result<Array2<f64>> {
    check_inputs(model, inputs)?;
    let h = model.config.hidden_dim;
    if x.dim() != (inputs.len(), h) {
        return Err(Error::Shape(format!(
            "layer input is {:?}, expected ({}, {h})",
            x.dim(),
            inputs.len()
        )));
    }
    let off = model
        .layout
        .layers
        .get(layer)
        .ok_or_else(|| Error::Shape(format!("no layer {layer}")))?;
    let (y, _) = layer_forward(
        off,
        h,
        &model.params,
        inputs,
        x.to_owned(),
        model.config.dropout,
        &mut mode,
    );
    Ok(y)
}

/// Full forward pass: embedding, attention stack, sigmoid classifier.
pub fn forward(model: &GatModel, inputs: &GraphInputs, mut mode: Mode<'_>) -> Result<ForwardPass> {
    check_inputs(model, inputs)?;
    let layout = &model.layout;
    let p = &model.params;
    let h = layout.h;
    let mut x = embed_unchecked(layout, p, inputs);
    let mut layers = Vec::with_capacity(layout.layers.len());
    for off in &layout.layers {
        let (y, cache) = layer_forward(off, h, p, inputs, x, model.config.dropout, &mut mode);
        layers.push(cache);
        x = y;
    }
    let w = vector(p, layout.classifier, h);
    let b = p[layout.classifier_bias];
    let logits: Vec<f64> = x.rows().into_iter().map(|row| row.dot(&w) + b).collect();
    let probs = logits.iter().map(|&z| sigmoid(z)).collect();
    Ok(ForwardPass {
        layers,
        hidden: x,
        logits,
        probs,
    })
}

/// Mean negative log-likelihood over `positives` and `negatives`, with
/// probabilities clamped at [`PROB_EPS`]. Zero when both sets are empty.
pub fn loss(probs: &[f64], positives: &[usize], negatives: &[usize]) -> f64 {
    let n = positives.len() + negatives.len();
    if n == 0 {
        return 0.0;
    }
    let pos: f64 = positives.iter().map(|&i| -probs[i].max(PROB_EPS).ln()).sum();
    let neg: f64 = negatives.iter().map(|&i| -(1.0 - probs[i]).max(PROB_EPS).ln()).sum();
    (pos + neg) / n as f64
}

/// Gradient of [`loss`] with respect to each logit.
pub fn loss_grad(probs: &[f64], positives: &[usize], negatives: &[usize]) -> Vec<f64> {
    let mut g = vec![0.0; probs.len()];
    let n = positives.len() + negatives.len();
    if n == 0 {
        return g;
    }
    let scale = 1.0 / n as f64;
    for &i in positives {
        if probs[i] > PROB_EPS {
            g[i] -= (1.0 - probs[i]) * scale;
        }
    }
    for &i in negatives {
        if 1.0 - probs[i] > PROB_EPS {
            g[i] += probs[i] * scale;
        }
    }
    g
}

fn layer_backward(
    off: &LayerOffsets,
    h: usize,
    p: &[f64],
    grad: &mut [f64],
    inputs: &GraphInputs,
    cache: &LayerCache,
    mut d_y: Array2<f64>,
) -> Array2<f64> {
    if let Some(m) = &cache.mask {
        d_y *= m;
    }
    let d_pre = ndarray::Zip::from(&d_y)
        .and(&cache.pre)
        .map_collect(|&d, &z| if z > 0.0 { d } else { 0.0 });
    let x = &cache.input;
    let wo = mat(p, off.out, h, NUM_HEADS * h);
    mat_mut(grad, off.out, h, NUM_HEADS * h).scaled_add(1.0, &d_pre.t().dot(&cache.concat));
    {
        let mut gb = ndarray::ArrayViewMut1::from(&mut grad[off.out_bias..off.out_bias + h]);
        gb += &d_pre.sum_axis(Axis(0));
    }
    let d_concat = d_pre.dot(&wo);

    let n = x.nrows();
    let mut d_x = Array2::zeros((n, h));
    for (r, head) in cache.heads.iter().enumerate() {
        let d_vhat = d_concat.slice(s![.., r * h..(r + 1) * h]);
        d_x += &d_vhat;
        let mut d_q = Array2::<f64>::zeros((n, h));
        let mut d_k = Array2::<f64>::zeros((n, h));
        let mut d_v = Array2::<f64>::zeros((n, h));
        for i in 0..n {
            let nbrs = &inputs.neighbors[r][i];
            if nbrs.is_empty() {
                continue;
            }
            let a = &head.alpha[i];
            let dv_i = d_vhat.row(i);
            let d_alpha: Vec<f64> = nbrs.iter().map(|&j| dv_i.dot(&head.v.row(j))).collect();
            let mean: f64 = a.iter().zip(&d_alpha).map(|(a, d)| a * d).sum();
            for (t, &j) in nbrs.iter().enumerate() {
                d_v.row_mut(j).scaled_add(a[t], &dv_i);
                let d_score = a[t] * (d_alpha[t] - mean);
                d_q.row_mut(i).scaled_add(d_score, &head.k.row(j));
                d_k.row_mut(j).scaled_add(d_score, &head.q.row(i));
            }
        }
        for (d, w_off) in [(&d_q, off.query[r]), (&d_k, off.key[r]), (&d_v, off.value[r])] {
            mat_mut(grad, w_off, h, h).scaled_add(1.0, &d.t().dot(x));
            d_x += &d.dot(&mat(p, w_off, h, h));
        }
    }
    d_x
}

/// Reverse pass: gradient of the loss with respect to every parameter,
/// given `d_logits`. Weight matrices are read from `p`, which is the
/// forward parameter vector except under fault injection.
pub(crate) fn backward_with(
    layout: &Layout,
    p: &[f64],
    inputs: &GraphInputs,
    pass: &ForwardPass,
    d_logits: &[f64],
) -> Vec<f64> {
    let h = layout.h;
    let mut grad = vec![0.0; layout.num_params()];
    let d_logits = ArrayView1::from(d_logits);
    {
        let mut gw = ndarray::ArrayViewMut1::from(&mut grad[layout.classifier..layout.classifier + h]);
        gw += &pass.hidden.t().dot(&d_logits);
    }
    grad[layout.classifier_bias] += d_logits.sum();
    let w = vector(p, layout.classifier, h);
    let mut d_x: Array2<f64> = d_logits.insert_axis(Axis(1)).dot(&w.insert_axis(Axis(0)));
    for (off, cache) in layout.layers.iter().zip(&pass.layers).rev() {
        d_x = layer_backward(off, h, p, &mut grad, inputs, cache, d_x);
    }

    let d_count: Array1<f64> = d_x.t().dot(&ArrayView1::from(&inputs.count[..]));
    for (g, d) in grad[layout.count..layout.count + h].iter_mut().zip(&d_count) {
        *g += d;
    }
    for (i, row) in d_x.rows().into_iter().enumerate() {
        mat_mut(&mut grad, layout.section, h, layout.num_sections)
            .column_mut(inputs.section[i])
            .scaled_add(1.0, &row);
        mat_mut(&mut grad, layout.entity_type, h, super::config::NUM_TYPES)
            .column_mut(inputs.entity_type[i])
            .scaled_add(1.0, &row);
    }
    mat_mut(&mut grad, layout.embed, h, layout.embed_dim).scaled_add(1.0, &d_x.t().dot(&inputs.embedding));
    grad
}

pub fn backward(model: &GatModel, inputs: &GraphInputs, pass: &ForwardPass, d_logits: &[f64]) -> Vec<f64> {
    backward_with(&model.layout, &model.params, inputs, pass, d_logits)
}

/// Loss and parameter gradient for fixed positive and negative sets.
pub fn loss_and_grad(
    model: &GatModel,
    inputs: &GraphInputs,
    positives: &[usize],
    negatives: &[usize],
    mode: Mode<'_>,
) -> Result<(f64, Vec<f64>)> {
    let pass = forward(model, inputs, mode)?;
    let l = loss(&pass.probs, positives, negatives);
    let d = loss_grad(&pass.probs, positives, negatives);
    Ok((l, backward(model, inputs, &pass, &d)))
}
