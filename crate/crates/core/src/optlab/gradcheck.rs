use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{loss, loss_and_grad, Bigram, SurrogateModel};
use super::params::Params;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckConfig {
    /// Coordinates to compare; sampling stops early when they run out.
    pub samples: usize,
    pub step: f64,
    /// Coordinates where both gradients are smaller than this are skipped.
    pub floor: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            step: 1e-5,
            floor: 1e-3,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub compared: usize,
    pub skipped: usize,
    /// Block holding the worst coordinate.
    pub worst_block: Option<String>,
    pub passed: bool,
}

/// Central finite differences against the model's analytic gradient.
pub fn check_gradients(model: &SurrogateModel, batch: &[Bigram], config: &GradCheckConfig) -> GradCheckReport {
    check_gradients_with(model, batch, config, |p| loss_and_grad(model.dims, p, batch).1)
}

/// Same check with a caller-supplied analytic gradient.
pub fn check_gradients_with(
    model: &SurrogateModel,
    batch: &[Bigram],
    config: &GradCheckConfig,
    analytic: impl Fn(&Params) -> Params,
) -> GradCheckReport {
    let grads = analytic(&model.params);
    let mut coords: Vec<(usize, usize)> = model.params.coordinates().collect();
    coords.shuffle(&mut stream_rng(config.seed, "optlab.gradcheck"));

    let mut probe = model.params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        compared: 0,
        skipped: 0,
        worst_block: None,
        passed: true,
    };
    for (b, i) in coords {
        if report.compared >= config.samples {
            break;
        }
        let original = probe.blocks[b].values[i];
        probe.blocks[b].values[i] = original + config.step;
        let up = loss(model.dims, &probe, batch);
        probe.blocks[b].values[i] = original - config.step;
        let down = loss(model.dims, &probe, batch);
        probe.blocks[b].values[i] = original;

        let numeric = (up - down) / (2.0 * config.step);
        let a = grads.blocks[b].values[i];
        if a.abs() < config.floor && numeric.abs() < config.floor {
            report.skipped += 1;
            continue;
        }
        report.compared += 1;
        let rel = (a - numeric).abs() / numeric.abs().max(config.floor);
        if rel > report.max_rel_error || rel.is_nan() {
            report.max_rel_error = rel;
            report.worst_block = Some(grads.blocks[b].name.clone());
        }
    }
    report.passed = report.max_rel_error < config.tolerance;
    report
}
