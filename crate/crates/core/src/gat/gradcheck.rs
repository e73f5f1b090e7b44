use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::GatModel;
use super::network::{backward_with, forward, loss, loss_grad, GraphInputs, Mode};

pub const FD_STEP: f64 = 1e-4;
pub const DEFAULT_SAMPLES: usize = 200;

/// Shifts one parameter in the copy read by the reverse pass only, so the
/// analytic gradient no longer matches the forward function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardFault {
    pub param: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Samples dropped because the finite-difference stencil crossed a ReLU kink.
    pub skipped_kinks: usize,
    /// Tensor holding the worst-matching parameter.
    pub worst_tensor: Option<String>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares the analytic gradient of the loss with central differences on
/// `samples` randomly chosen parameters. Dropout is off.
pub fn grad_check(
    model: &GatModel,
    inputs: &GraphInputs,
    positives: &[usize],
    negatives: &[usize],
    samples: usize,
    seed: u64,
    fault: Option<BackwardFault>,
) -> Result<GradCheckReport> {
    if inputs.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let pass = forward(model, inputs, Mode::Eval)?;
    let d = loss_grad(&pass.probs, positives, negatives);
    let mut backward_params = model.params.clone();
    if let Some(f) = fault {
        *backward_params
            .get_mut(f.param)
            .ok_or_else(|| Error::Config(format!("fault parameter {} out of range", f.param)))? += f.delta;
    }
    let analytic = backward_with(&model.layout, &backward_params, inputs, &pass, &d);
    let pattern = pass.relu_pattern();

    let mut order: Vec<usize> = (0..model.params.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped_kinks: 0,
        worst_tensor: None,
    };
    for &i in &order {
        if report.checked == samples {
            break;
        }
        let base = probe.params[i];
        let mut eval = |x: f64| -> Result<(f64, bool)> {
            probe.params[i] = x;
            let p = forward(&probe, inputs, Mode::Eval)?;
            Ok((loss(&p.probs, positives, negatives), p.relu_pattern() == pattern))
        };
        let (plus, same_plus) = eval(base + FD_STEP)?;
        let (minus, same_minus) = eval(base - FD_STEP)?;
        probe.params[i] = base;
        if !(same_plus && same_minus) {
            report.skipped_kinks += 1;
            continue;
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let err = relative_error(analytic[i], numeric);
        report.checked += 1;
        if err > report.max_rel_error || report.worst_tensor.is_none() {
            report.max_rel_error = report.max_rel_error.max(err);
            report.worst_tensor = model.layout.tensor_of(i).map(|t| t.name.clone());
        }
    }
    Ok(report)
}
