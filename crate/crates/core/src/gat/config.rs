use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityType, RelationType};

/// One attention head per relation type.
pub const NUM_HEADS: usize = RelationType::ALL.len();
pub const NUM_TYPES: usize = EntityType::ALL.len();

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Hyperparameters of the salience classifier and its trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GatConfig {
    pub hidden_dim: usize,
    pub num_layers: usize,
    /// Section one-hot width; later sections share the last bucket.
    pub num_sections: usize,
    pub embed_dim: usize,
    pub dropout: f64,
    pub lr: f64,
    pub neg_ratio: usize,
    pub batch_size: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Attend over out-neighbors only instead of both directions.
    pub directed_attention: bool,
    /// Use `ln(1 + count)` instead of the raw mention count.
    pub log_count: bool,
    /// Dev-set evaluation interval in steps, when a dev set is given.
    pub eval_every: usize,
}

impl Default for GatConfig {
    fn default() -> Self {
        GatConfig {
            hidden_dim: 16,
            num_layers: 6,
            num_sections: 20,
            embed_dim: 768,
            dropout: 0.2,
            lr: 5e-5,
            neg_ratio: 3,
            batch_size: 10,
            max_steps: 1000,
            seed: 0,
            threshold: 0.5,
            directed_attention: false,
            log_count: false,
            eval_every: 100,
        }
    }
}

impl GatConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("hidden_dim", self.hidden_dim),
            ("num_layers", self.num_layers),
            ("num_sections", self.num_sections),
            ("embed_dim", self.embed_dim),
            ("neg_ratio", self.neg_ratio),
            ("batch_size", self.batch_size),
            ("eval_every", self.eval_every),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("lr must be positive".into()));
        }
        Ok(())
    }
}
