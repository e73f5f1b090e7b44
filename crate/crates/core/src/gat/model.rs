//! Parameter storage. All tensors live in one flat `Vec<f64>` in declared
//! order; [`Layout`] records where each one starts.

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::{GatConfig, NUM_HEADS, NUM_TYPES};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LayerOffsets {
    pub query: [usize; NUM_HEADS],
    pub key: [usize; NUM_HEADS],
    pub value: [usize; NUM_HEADS],
    pub out: usize,
    pub out_bias: usize,
}

/// Offsets of every tensor for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub tensors: Vec<TensorSpec>,
    pub(crate) count: usize,
    pub(crate) section: usize,
    pub(crate) entity_type: usize,
    pub(crate) embed: usize,
    pub(crate) layers: Vec<LayerOffsets>,
    pub(crate) classifier: usize,
    pub(crate) classifier_bias: usize,
    pub(crate) h: usize,
    pub(crate) num_sections: usize,
    pub(crate) embed_dim: usize,
    total: usize,
}

impl Layout {
    pub fn new(cfg: &GatConfig) -> Self {
        let h = cfg.hidden_dim;
        let mut tensors = Vec::new();
        let mut next = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let offset = next;
            next += shape.iter().product::<usize>();
            tensors.push(TensorSpec { name, shape, offset });
            offset
        };
        let count = push("count".into(), vec![h]);
        let section = push("section".into(), vec![h, cfg.num_sections]);
        let entity_type = push("type".into(), vec![h, NUM_TYPES]);
        let embed = push("embed".into(), vec![h, cfg.embed_dim]);
        let mut layers = Vec::with_capacity(cfg.num_layers);
        for l in 0..cfg.num_layers {
            let mut off = LayerOffsets {
                query: [0; NUM_HEADS],
                key: [0; NUM_HEADS],
                value: [0; NUM_HEADS],
                out: 0,
                out_bias: 0,
            };
            for r in 0..NUM_HEADS {
                off.query[r] = push(format!("layer{l}.head{r}.query"), vec![h, h]);
                off.key[r] = push(format!("layer{l}.head{r}.key"), vec![h, h]);
                off.value[r] = push(format!("layer{l}.head{r}.value"), vec![h, h]);
            }
            off.out = push(format!("layer{l}.out"), vec![h, NUM_HEADS * h]);
            off.out_bias = push(format!("layer{l}.out_bias"), vec![h]);
            layers.push(off);
        }
        let classifier = push("classifier".into(), vec![h]);
        let classifier_bias = push("classifier_bias".into(), vec![1]);
        Layout {
            tensors,
            count,
            section,
            entity_type,
            embed,
            layers,
            classifier,
            classifier_bias,
            h,
            num_sections: cfg.num_sections,
            embed_dim: cfg.embed_dim,
            total: next,
        }
    }

    pub fn num_params(&self) -> usize {
        self.total
    }

    /// Name of the tensor that holds flat index `i`.
    pub fn tensor_of(&self, i: usize) -> Option<&TensorSpec> {
        self.tensors
            .iter()
            .find(|t| (t.offset..t.offset + t.len()).contains(&i))
    }

    pub fn get(&self, name: &str) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.name == name)
    }
}

pub(crate) fn mat(p: &[f64], off: usize, rows: usize, cols: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((rows, cols), &p[off..off + rows * cols]).expect("layout shape")
}

pub(crate) fn mat_mut(p: &mut [f64], off: usize, rows: usize, cols: usize) -> ArrayViewMut2<'_, f64> {
    ArrayViewMut2::from_shape((rows, cols), &mut p[off..off + rows * cols]).expect("layout shape")
}

pub(crate) fn vector(p: &[f64], off: usize, len: usize) -> ArrayView1<'_, f64> {
    ArrayView1::from(&p[off..off + len])
}

/// The salience classifier: configuration plus flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GatModel {
    pub config: GatConfig,
    pub layout: Layout,
    pub params: Vec<f64>,
}

impl GatModel {
    pub fn zeros(config: &GatConfig) -> Self {
        let layout = Layout::new(config);
        GatModel {
            params: vec![0.0; layout.num_params()],
            layout,
            config: config.clone(),
        }
    }

    /// Every parameter uniform in `[-1/sqrt(h), 1/sqrt(h)]`.
    pub fn init(config: &GatConfig, rng: &mut impl Rng) -> Self {
        let mut model = Self::zeros(config);
        let bound = 1.0 / (config.hidden_dim as f64).sqrt();
        for p in &mut model.params {
            *p = rng.random_range(-bound..=bound);
        }
        model
    }

    /// Mutable view of one named tensor.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let spec = self.layout.get(name)?.clone();
        Some(&mut self.params[spec.offset..spec.offset + spec.len()])
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        let spec = self.layout.get(name)?;
        Some(&self.params[spec.offset..spec.offset + spec.len()])
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            tensors: self
                .layout
                .tensors
                .iter()
                .map(|t| NamedTensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    values: self.params[t.offset..t.offset + t.len()].to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::InvalidRecord(format!(
                "unsupported model format {} v{}",
                file.format, file.version
            )));
        }
        file.config.validate()?;
        let mut model = GatModel::zeros(&file.config);
        if file.tensors.len() != model.layout.tensors.len() {
            return Err(Error::Shape(format!(
                "model file has {} tensors, configuration needs {}",
                file.tensors.len(),
                model.layout.tensors.len()
            )));
        }
        for (spec, t) in model.layout.tensors.clone().iter().zip(file.tensors) {
            if spec.name != t.name || spec.shape != t.shape || t.values.len() != spec.len() {
                return Err(Error::Shape(format!(
                    "tensor `{}` {:?} does not match expected `{}` {:?}",
                    t.name, t.shape, spec.name, spec.shape
                )));
            }
            if t.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidRecord(format!(
                    "tensor `{}` has non-finite values",
                    t.name
                )));
            }
            model.params[spec.offset..spec.offset + spec.len()].copy_from_slice(&t.values);
        }
        Ok(model)
    }
}

pub const MODEL_FORMAT: &str = "kgsum-gat";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// JSON model container: config echo plus tensors in declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: GatConfig,
    pub tensors: Vec<NamedTensor>,
}
