//! Finite-difference verification of the hand-written backpropagation.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::lstm::LstmLayout;
use super::mlp::MlpLayout;
use super::{Architecture, ModelError, SurrogateModel};
use crate::dataio::Dataset;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Gradient magnitudes below this are compared absolutely.
const REL_FLOOR: f64 = 1e-6;

/// Inputs and targets matching a model's architecture.
#[derive(Debug, Clone)]
pub enum GradBatch {
    Mlp {
        inputs: Vec<Vec<f64>>,
        targets: Vec<f64>,
    },
    Lstm {
        inputs: Vec<Vec<Vec<f64>>>,
        targets: Vec<Vec<f64>>,
    },
}

impl GradBatch {
    /// Uniform random inputs in `[0, 1]` and standard-scale targets.
    pub fn random(model: &SurrogateModel, size: usize, seed: u64) -> Result<Self, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match model.architecture {
            Architecture::Mlp { input, .. } => Ok(GradBatch::Mlp {
                inputs: (0..size)
                    .map(|_| (0..input).map(|_| rng.random::<f64>()).collect())
                    .collect(),
                targets: (0..size).map(|_| rng.random_range(-1.0..1.0)).collect(),
            }),
            Architecture::Lstm { input, n_steps, .. } => Ok(GradBatch::Lstm {
                inputs: (0..size)
                    .map(|_| {
                        (0..n_steps)
                            .map(|_| (0..input).map(|_| rng.random::<f64>()).collect())
                            .collect()
                    })
                    .collect(),
                targets: (0..size)
                    .map(|_| (0..n_steps).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect(),
            }),
            Architecture::Polynomial { .. } => Err(ModelError::WrongModelKind(model.kind)),
        }
    }

    /// All-zero inputs and targets.
    pub fn zeros(model: &SurrogateModel, size: usize) -> Result<Self, ModelError> {
        match model.architecture {
            Architecture::Mlp { input, .. } => Ok(GradBatch::Mlp {
                inputs: vec![vec![0.0; input]; size],
                targets: vec![0.0; size],
            }),
            Architecture::Lstm { input, n_steps, .. } => Ok(GradBatch::Lstm {
                inputs: vec![vec![vec![0.0; input]; n_steps]; size],
                targets: vec![vec![0.0; n_steps]; size],
            }),
            Architecture::Polynomial { .. } => Err(ModelError::WrongModelKind(model.kind)),
        }
    }

    /// The first `size` records of a dataset in the model's input encoding.
    pub fn from_dataset(
        model: &SurrogateModel,
        data: &Dataset,
        size: usize,
    ) -> Result<Self, ModelError> {
        let recs = &data.records[..size.min(data.records.len())];
        if recs.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        match model.architecture {
            Architecture::Mlp { .. } => Ok(GradBatch::Mlp {
                inputs: recs
                    .iter()
                    .map(|r| super::network_inputs(&model.normalization, &r.gait).to_vec())
                    .collect(),
                targets: recs.iter().map(|r| model.target.mean_of(r)).collect(),
            }),
            Architecture::Lstm { .. } => Ok(GradBatch::Lstm {
                inputs: recs.iter().map(|r| model.record_sequence(r)).collect(),
                targets: recs.iter().map(|r| model.target.series_of(r)).collect(),
            }),
            Architecture::Polynomial { .. } => Err(ModelError::WrongModelKind(model.kind)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter index with the largest error.
    pub worst_index: usize,
    pub checked: usize,
}

fn loss_and_grad(
    model: &SurrogateModel,
    params: &[f64],
    batch: &GradBatch,
    grad: &mut [f64],
) -> Result<f64, ModelError> {
    match (&model.architecture, batch) {
        (Architecture::Mlp { input, hidden }, GradBatch::Mlp { inputs, targets }) => {
            let xs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
            Ok(MlpLayout::new(*input, hidden).loss_and_grad(params, &xs, targets, grad))
        }
        (Architecture::Lstm { input, hidden, .. }, GradBatch::Lstm { inputs, targets }) => {
            let xs: Vec<&[Vec<f64>]> = inputs.iter().map(Vec::as_slice).collect();
            let ts: Vec<&[f64]> = targets.iter().map(Vec::as_slice).collect();
            Ok(LstmLayout::new(*input, *hidden).loss_and_grad(params, &xs, &ts, grad))
        }
        _ => Err(ModelError::WrongModelKind(model.kind)),
    }
}

/// Relative difference with a small absolute floor.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares the analytic gradient at `indices` with central differences.
pub fn check_gradients_at(
    model: &SurrogateModel,
    batch: &GradBatch,
    indices: &[usize],
) -> Result<GradCheckReport, ModelError> {
    let n = model.params.len();
    let mut grad = vec![0.0; n];
    loss_and_grad(model, &model.params, batch, &mut grad)?;
    let mut scratch = vec![0.0; n];
    let mut params = model.params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        checked: 0,
    };
    for &i in indices {
        if i >= n {
            return Err(ModelError::InvalidModel(format!(
                "parameter index {i} out of range {n}"
            )));
        }
        let orig = params[i];
        params[i] = orig + FD_STEP;
        let up = loss_and_grad(model, &params, batch, &mut scratch)?;
        params[i] = orig - FD_STEP;
        let down = loss_and_grad(model, &params, batch, &mut scratch)?;
        params[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        let err = relative_error(grad[i], numeric);
        if err > report.max_relative_error || report.checked == 0 {
            report.max_relative_error = err;
            report.worst_index = i;
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Checks `n_params` distinct parameters chosen at random (all of them when
/// the model has fewer).
pub fn check_gradients(
    model: &SurrogateModel,
    batch: &GradBatch,
    n_params: usize,
    seed: u64,
) -> Result<GradCheckReport, ModelError> {
    let total = model.params.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, total, n_params.min(total)).into_vec();
    idx.sort_unstable();
    check_gradients_at(model, batch, &idx)
}
