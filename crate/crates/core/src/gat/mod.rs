//! Relation-typed graph attention classifier that marks full-graph nodes as
//! salient. One attention head per relation type; head outputs are
//! concatenated, projected and passed through a ReLU in every layer.

mod config;
mod gradcheck;
mod model;
mod network;
mod train;

pub use config::{GatConfig, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, NUM_HEADS, NUM_TYPES};
pub use gradcheck::{grad_check, relative_error, BackwardFault, GradCheckReport, DEFAULT_SAMPLES, FD_STEP};
pub use model::{GatModel, Layout, ModelFile, NamedTensor, TensorSpec, MODEL_FORMAT, MODEL_VERSION};
pub use network::{
    attention_layer, backward, embed_nodes, forward, loss, loss_and_grad, loss_grad, sigmoid, ForwardPass, GraphInputs,
    Mode, PROB_EPS,
};
pub use train::{
    dev_typed_relation_f1, labels_from_alignment, positive_ordinals, predict, predict_probs, sample_negatives, train,
    DevGraph, LogEntry, TrainGraph, TrainLabel, TrainOutcome,
};
