//! Forward models from gait parameters to cycle-mean thrust or power.
//!
//! Four model kinds share one [`SurrogateModel`] container: linear and
//! quartic polynomials, an MLP on the four gait features, and an LSTM that
//! consumes the instantaneous stroke/pitch angles plus the gait features at
//! each timestep and emits the target per timestep.

mod gradcheck;
mod lstm;
mod mlp;
mod optim;
mod persist;
mod poly;

pub use gradcheck::{check_gradients, check_gradients_at, GradBatch, GradCheckReport, FD_STEP};
pub use persist::{load_model, save_model, MODEL_MAGIC, MODEL_SCHEMA_VERSION};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataio::{Dataset, DatasetRecord, FeatureBounds};
use crate::domain::{gait_trajectory, is_attainable, FinMaterial, GaitParams, CYCLE_STEPS};

use lstm::LstmLayout;
use mlp::MlpLayout;
use optim::Adam;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset mixes materials {0:?}; fit one model per material")]
    MixedMaterials(Vec<FinMaterial>),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    DivergedTraining { epoch: usize, loss: f64 },
    #[error("gait is not attainable: {0}")]
    UnattainableGait(GaitParams),
    #[error("operation needs an LSTM model, got {0}")]
    WrongModelKind(ModelKind),
    #[error("holdout is empty")]
    EmptyHoldout,
    #[error("holdout gait {0} is not in the dataset")]
    UnknownHoldoutGait(GaitParams),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file schema version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("model file checksum mismatch or truncated file")]
    Checksum,
    #[error("not a model file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Quartic,
    Mlp,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Linear,
        ModelKind::Quartic,
        ModelKind::Mlp,
        ModelKind::Lstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Quartic => "quartic",
            ModelKind::Mlp => "mlp",
            ModelKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                format!("unknown model kind `{s}` (expected linear, quartic, mlp or lstm)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Thrust,
    Power,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Thrust, Target::Power];

    pub fn name(self) -> &'static str {
        match self {
            Target::Thrust => "thrust",
            Target::Power => "power",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Target::Thrust => "N",
            Target::Power => "W",
        }
    }

    /// Cycle-mean value of this target in a record.
    pub fn mean_of(self, r: &DatasetRecord) -> f64 {
        match self {
            Target::Thrust => r.mean_thrust(),
            Target::Power => r.mean_power(),
        }
    }

    /// Per-timestep value of this target in a record.
    pub fn series_of(self, r: &DatasetRecord) -> Vec<f64> {
        match self {
            Target::Thrust => r.series.thrust.clone(),
            Target::Power => r.series.power_series(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown target `{s}` (expected thrust or power)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Architecture {
    Polynomial {
        degree: u32,
    },
    Mlp {
        input: usize,
        hidden: Vec<usize>,
    },
    Lstm {
        input: usize,
        hidden: usize,
        n_steps: usize,
    },
}

impl Architecture {
    pub fn param_count(&self) -> usize {
        match self {
            Architecture::Polynomial { degree } => poly::n_terms(*degree),
            Architecture::Mlp { input, hidden } => MlpLayout::new(*input, hidden).param_count(),
            Architecture::Lstm { input, hidden, .. } => {
                LstmLayout::new(*input, *hidden).param_count()
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    /// Final training loss (mean squared error, target units squared).
    pub final_loss: f64,
    /// Content hash of the training dataset.
    pub data_hash: String,
    /// Training loss per epoch.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

/// LSTM input width: instantaneous stroke and pitch angle plus the four gait features.
pub const LSTM_INPUTS: usize = 6;
const GAIT_FEATURES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub kind: ModelKind,
    pub target: Target,
    pub material: FinMaterial,
    pub architecture: Architecture,
    pub normalization: FeatureBounds,
    pub params: Vec<f64>,
    pub training_meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpHyper {
    pub hidden_layers: usize,
    pub width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            width: 64,
            epochs: 1000,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmHyper {
    pub hidden_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LstmHyper {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            epochs: 1000,
            learning_rate: 1e-3,
            batch_size: 32,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: ModelKind,
    pub target: Target,
    pub material: FinMaterial,
    /// Mean absolute error of cycle-mean predictions, target units.
    pub mean_absolute_error: f64,
    pub per_gait_errors: Vec<(GaitParams, f64)>,
    pub forward_passes_per_second: f64,
}

/// Anything that maps a gait to a cycle-mean target value.
pub trait Predictor: Sync {
    fn predict_mean(&self, gait: &GaitParams) -> Result<f64, ModelError>;

    /// Stable identifier of the predictor's content, for provenance.
    fn provenance(&self) -> String;
}

impl Predictor for SurrogateModel {
    fn predict_mean(&self, gait: &GaitParams) -> Result<f64, ModelError> {
        predict_mean(self, gait)
    }

    fn provenance(&self) -> String {
        format!(
            "{}:{}:{}:{}",
            self.material,
            self.target,
            self.kind,
            self.content_hash()
        )
    }
}

fn single_material(data: &Dataset) -> Result<FinMaterial, ModelError> {
    let ms = data.materials();
    match ms.as_slice() {
        [] => Err(ModelError::EmptyDataset),
        [m] => Ok(*m),
        _ => Err(ModelError::MixedMaterials(ms)),
    }
}

fn mean_inputs(data: &Dataset) -> Vec<[f64; GAIT_FEATURES]> {
    data.records
        .iter()
        .map(|r| data.normalization.normalize(&r.gait))
        .collect()
}

/// Network inputs are the normalized features recentred onto `[-1, 1]`.
fn centred<const N: usize>(v: [f64; N]) -> [f64; N] {
    v.map(|x| 2.0 * x - 1.0)
}

pub(crate) fn network_inputs(bounds: &FeatureBounds, gait: &GaitParams) -> [f64; GAIT_FEATURES] {
    centred(bounds.normalize(gait))
}

fn lstm_step_inputs(
    bounds: &FeatureBounds,
    gait: &GaitParams,
    stroke: &[f64],
    pitch: &[f64],
) -> Vec<Vec<f64>> {
    let g = network_inputs(bounds, gait);
    stroke
        .iter()
        .zip(pitch)
        .map(|(&s, &p)| {
            let [a, b] = centred(bounds.normalize_angles(s, p));
            vec![a, b, g[0], g[1], g[2], g[3]]
        })
        .collect()
}

/// Target statistics used to train in standardized units.
fn standardizer(ys: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = ys.clone().count() as f64;
    let mean = ys.clone().sum::<f64>() / n;
    let var = ys.map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd > 1e-12 { sd } else { 1.0 })
}

impl SurrogateModel {
    fn check(&self) -> Result<(), ModelError> {
        let want = self.architecture.param_count();
        if self.params.len() != want {
            return Err(ModelError::InvalidModel(format!(
                "{} parameters, architecture needs {want}",
                self.params.len()
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::InvalidModel("non-finite parameter".into()));
        }
        let consistent = matches!(
            (&self.kind, &self.architecture),
            (ModelKind::Linear, Architecture::Polynomial { degree: 1 })
                | (ModelKind::Quartic, Architecture::Polynomial { degree: 4 })
                | (ModelKind::Mlp, Architecture::Mlp { .. })
                | (ModelKind::Lstm, Architecture::Lstm { .. })
        );
        if !consistent {
            return Err(ModelError::InvalidModel(format!(
                "{} with architecture {:?}",
                self.kind, self.architecture
            )));
        }
        Ok(())
    }

    /// Freshly initialized MLP (no training).
    pub fn init_mlp(
        material: FinMaterial,
        target: Target,
        hyper: &MlpHyper,
        normalization: FeatureBounds,
    ) -> SurrogateModel {
        let hidden = vec![hyper.width; hyper.hidden_layers];
        let layout = MlpLayout::new(GAIT_FEATURES, &hidden);
        let params = layout.init(&mut ChaCha8Rng::seed_from_u64(hyper.seed));
        SurrogateModel {
            kind: ModelKind::Mlp,
            target,
            material,
            architecture: Architecture::Mlp {
                input: GAIT_FEATURES,
                hidden,
            },
            normalization,
            params,
            training_meta: TrainingMeta::default(),
        }
    }

    /// Freshly initialized LSTM (no training).
    pub fn init_lstm(
        material: FinMaterial,
        target: Target,
        hyper: &LstmHyper,
        normalization: FeatureBounds,
    ) -> SurrogateModel {
        let layout = LstmLayout::new(LSTM_INPUTS, hyper.hidden_size);
        let params = layout.init(&mut ChaCha8Rng::seed_from_u64(hyper.seed));
        SurrogateModel {
            kind: ModelKind::Lstm,
            target,
            material,
            architecture: Architecture::Lstm {
                input: LSTM_INPUTS,
                hidden: hyper.hidden_size,
                n_steps: CYCLE_STEPS,
            },
            normalization,
            params,
            training_meta: TrainingMeta::default(),
        }
    }

    /// Indices of every bias parameter (MLP and LSTM); empty for polynomials.
    pub fn bias_parameter_indices(&self) -> Vec<usize> {
        match &self.architecture {
            Architecture::Polynomial { .. } => Vec::new(),
            Architecture::Mlp { input, hidden } => MlpLayout::new(*input, hidden).bias_indices(),
            Architecture::Lstm { input, hidden, .. } => {
                LstmLayout::new(*input, *hidden).bias_indices()
            }
        }
    }

    /// Index of the scalar output bias of a network model.
    pub fn output_bias_index(&self) -> Option<usize> {
        match &self.architecture {
            Architecture::Polynomial { .. } => None,
            Architecture::Mlp { input, hidden } => {
                Some(MlpLayout::new(*input, hidden).output_bias_index())
            }
            Architecture::Lstm { input, hidden, .. } => {
                Some(LstmLayout::new(*input, *hidden).output_bias_index())
            }
        }
    }

    /// SHA-256 of the serialized model file, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(persist::encode(self)))
    }

    /// Per-timestep LSTM inputs for a record as it was measured.
    fn record_sequence(&self, r: &DatasetRecord) -> Vec<Vec<f64>> {
        lstm_step_inputs(
            &self.normalization,
            &r.gait,
            &r.series.stroke_angle,
            &r.series.pitch_angle,
        )
    }

    fn lstm_layout(&self) -> Option<(LstmLayout, usize)> {
        match self.architecture {
            Architecture::Lstm {
                input,
                hidden,
                n_steps,
            } => Some((LstmLayout::new(input, hidden), n_steps)),
            _ => None,
        }
    }

    fn raw_mean(&self, gait: &GaitParams) -> f64 {
        match &self.architecture {
            Architecture::Polynomial { degree } => {
                poly::evaluate(&self.params, *degree, &self.normalization.normalize(gait))
            }
            Architecture::Mlp { input, hidden } => MlpLayout::new(*input, hidden)
                .forward(&self.params, &network_inputs(&self.normalization, gait)),
            Architecture::Lstm { n_steps, .. } => {
                let s = self.raw_series(gait, *n_steps);
                s.iter().sum::<f64>() / s.len() as f64
            }
        }
    }

    fn raw_series(&self, gait: &GaitParams, n_steps: usize) -> Vec<f64> {
        let (layout, _) = self.lstm_layout().expect("LSTM architecture");
        let (stroke, pitch) = gait_trajectory(gait, n_steps);
        layout.forward(
            &self.params,
            &lstm_step_inputs(&self.normalization, gait, &stroke, &pitch),
        )
    }
}

/// Least-squares polynomial over all monomials of the normalized features up
/// to total `degree` (1 = linear, 4 = quartic), ridge `1e-8`.
pub fn fit_polynomial(
    data: &Dataset,
    target: Target,
    degree: u32,
) -> Result<SurrogateModel, ModelError> {
    let material = single_material(data)?;
    let kind = match degree {
        1 => ModelKind::Linear,
        4 => ModelKind::Quartic,
        d => {
            return Err(ModelError::InvalidModel(format!(
                "polynomial degree {d}, expected 1 or 4"
            )))
        }
    };
    let inputs = mean_inputs(data);
    let targets: Vec<f64> = data.records.iter().map(|r| target.mean_of(r)).collect();
    let params = poly::fit(&inputs, &targets, degree)?;
    let sse: f64 = inputs
        .iter()
        .zip(&targets)
        .map(|(x, y)| {
            let e = poly::evaluate(&params, degree, x) - y;
            e * e
        })
        .sum();
    Ok(SurrogateModel {
        kind,
        target,
        material,
        architecture: Architecture::Polynomial { degree },
        normalization: data.normalization,
        params,
        training_meta: TrainingMeta {
            epochs: 0,
            final_loss: sse / targets.len() as f64,
            data_hash: data.content_hash(),
            loss_history: Vec::new(),
        },
    })
}

/// Mini-batch Adam training of a tanh MLP on cycle-mean targets.
///
/// Targets are standardized during training and the scaling is folded back
/// into the output layer afterwards.
pub fn fit_mlp(
    data: &Dataset,
    target: Target,
    hyper: &MlpHyper,
) -> Result<SurrogateModel, ModelError> {
    let material = single_material(data)?;
    let mut model = SurrogateModel::init_mlp(material, target, hyper, data.normalization);
    let hidden = vec![hyper.width; hyper.hidden_layers];
    let layout = MlpLayout::new(GAIT_FEATURES, &hidden);

    let inputs: Vec<[f64; GAIT_FEATURES]> = data
        .records
        .iter()
        .map(|r| network_inputs(&data.normalization, &r.gait))
        .collect();
    let raw: Vec<f64> = data.records.iter().map(|r| target.mean_of(r)).collect();
    let (mu, sd) = standardizer(raw.iter().copied());
    let ys: Vec<f64> = raw.iter().map(|y| (y - mu) / sd).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut opt = Adam::new(model.params.len(), hyper.learning_rate);
    let mut grad = vec![0.0; model.params.len()];
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut history = Vec::with_capacity(hyper.epochs);
    let batch = hyper.batch_size.max(1);

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| &inputs[i][..]).collect();
            let ts: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = layout.loss_and_grad(&model.params, &xs, &ts, &mut grad);
            epoch_loss += loss * chunk.len() as f64;
            opt.update(&mut model.params, &grad);
        }
        let epoch_loss = epoch_loss / inputs.len() as f64 * sd * sd;
        if !epoch_loss.is_finite() {
            return Err(ModelError::DivergedTraining {
                epoch,
                loss: epoch_loss,
            });
        }
        history.push(epoch_loss);
    }

    // fold the standardization into the output layer
    let out_b = layout.output_bias_index();
    let last_in = *hidden.last().unwrap_or(&GAIT_FEATURES);
    for w in &mut model.params[out_b - last_in..out_b] {
        *w *= sd;
    }
    model.params[out_b] = model.params[out_b] * sd + mu;

    let final_loss = history.last().copied().unwrap_or_else(|| {
        inputs
            .iter()
            .zip(&raw)
            .map(|(x, y)| (layout.forward(&model.params, x) - y).powi(2))
            .sum::<f64>()
            / raw.len() as f64
    });
    model.training_meta = TrainingMeta {
        epochs: hyper.epochs,
        final_loss,
        data_hash: data.content_hash(),
        loss_history: history,
    };
    model.check()?;
    Ok(model)
}

/// Mini-batch Adam training of the LSTM on per-timestep targets, with
/// backpropagation through the whole cycle.
pub fn fit_lstm(
    data: &Dataset,
    target: Target,
    hyper: &LstmHyper,
) -> Result<SurrogateModel, ModelError> {
    let material = single_material(data)?;
    let mut model = SurrogateModel::init_lstm(material, target, hyper, data.normalization);
    let (layout, _) = model.lstm_layout().expect("LSTM architecture");
    let n_steps = data.records[0].series.n_steps();
    model.architecture = Architecture::Lstm {
        input: LSTM_INPUTS,
        hidden: hyper.hidden_size,
        n_steps,
    };

    let seqs: Vec<Vec<Vec<f64>>> = data
        .records
        .iter()
        .map(|r| model.record_sequence(r))
        .collect();
    let raw: Vec<Vec<f64>> = data.records.iter().map(|r| target.series_of(r)).collect();
    let (mu, sd) = standardizer(raw.iter().flatten().copied());
    let ys: Vec<Vec<f64>> = raw
        .iter()
        .map(|s| s.iter().map(|y| (y - mu) / sd).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut opt = Adam::new(model.params.len(), hyper.learning_rate);
    let mut grad = vec![0.0; model.params.len()];
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    let mut history = Vec::with_capacity(hyper.epochs);
    let batch = hyper.batch_size.max(1);

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let xs: Vec<&[Vec<f64>]> = chunk.iter().map(|&i| &seqs[i][..]).collect();
            let ts: Vec<&[f64]> = chunk.iter().map(|&i| &ys[i][..]).collect();
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = layout.loss_and_grad(&model.params, &xs, &ts, &mut grad);
            epoch_loss += loss * chunk.len() as f64;
            opt.update(&mut model.params, &grad);
        }
        let epoch_loss = epoch_loss / seqs.len() as f64 * sd * sd;
        if !epoch_loss.is_finite() {
            return Err(ModelError::DivergedTraining {
                epoch,
                loss: epoch_loss,
            });
        }
        history.push(epoch_loss);
    }

    let out_b = layout.output_bias_index();
    for w in &mut model.params[out_b - layout.hidden..out_b] {
        *w *= sd;
    }
    model.params[out_b] = model.params[out_b] * sd + mu;

    model.training_meta = TrainingMeta {
        epochs: hyper.epochs,
        final_loss: history.last().copied().unwrap_or(f64::NAN),
        data_hash: data.content_hash(),
        loss_history: history,
    };
    if hyper.epochs == 0 {
        let sq: f64 = seqs
            .iter()
            .zip(&raw)
            .flat_map(|(x, y)| {
                layout
                    .forward(&model.params, x)
                    .into_iter()
                    .zip(y.iter())
                    .map(|(a, b)| (a - b).powi(2))
                    .collect::<Vec<_>>()
            })
            .sum();
        model.training_meta.final_loss = sq / (seqs.len() * n_steps) as f64;
    }
    model.check()?;
    Ok(model)
}

/// Cycle-mean prediction. For an LSTM this is the mean of its predicted
/// series over one cycle.
pub fn predict_mean(model: &SurrogateModel, gait: &GaitParams) -> Result<f64, ModelError> {
    if !is_attainable(gait) {
        return Err(ModelError::UnattainableGait(*gait));
    }
    Ok(model.raw_mean(gait))
}

/// Per-timestep LSTM prediction over one cycle of `n_steps` samples.
pub fn predict_series(
    model: &SurrogateModel,
    gait: &GaitParams,
    n_steps: usize,
) -> Result<Vec<f64>, ModelError> {
    if model.kind != ModelKind::Lstm {
        return Err(ModelError::WrongModelKind(model.kind));
    }
    if !is_attainable(gait) {
        return Err(ModelError::UnattainableGait(*gait));
    }
    Ok(model.raw_series(gait, n_steps))
}

/// Minimum number of timed predictions behind a throughput figure.
pub const MIN_TIMED_PREDICTIONS: usize = 1000;

/// Single-threaded predictions per second over `gaits`, repeated to at least
/// [`MIN_TIMED_PREDICTIONS`] calls.
pub fn measure_throughput(model: &SurrogateModel, gaits: &[GaitParams]) -> Result<f64, ModelError> {
    if gaits.is_empty() {
        return Err(ModelError::EmptyHoldout);
    }
    let mut sink = 0.0;
    let start = Instant::now();
    for i in 0..MIN_TIMED_PREDICTIONS.max(gaits.len()) {
        sink += predict_mean(model, &gaits[i % gaits.len()])?;
    }
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    std::hint::black_box(sink);
    Ok(MIN_TIMED_PREDICTIONS.max(gaits.len()) as f64 / secs)
}

/// Mean absolute error of cycle-mean predictions on `holdout`, plus
/// single-threaded throughput.
pub fn evaluate(
    model: &SurrogateModel,
    data: &Dataset,
    holdout: &[GaitParams],
) -> Result<EvalReport, ModelError> {
    if holdout.is_empty() {
        return Err(ModelError::EmptyHoldout);
    }
    let mut per_gait = Vec::with_capacity(holdout.len());
    for g in holdout {
        let rec = data
            .records
            .iter()
            .find(|r| r.gait == *g && r.material == model.material)
            .ok_or(ModelError::UnknownHoldoutGait(*g))?;
        let err = (predict_mean(model, g)? - model.target.mean_of(rec)).abs();
        per_gait.push((*g, err));
    }
    let mae = per_gait.iter().map(|(_, e)| e).sum::<f64>() / per_gait.len() as f64;
    Ok(EvalReport {
        kind: model.kind,
        target: model.target,
        material: model.material,
        mean_absolute_error: mae,
        per_gait_errors: per_gait,
        forward_passes_per_second: measure_throughput(model, holdout)?,
    })
}

/// Fits one model of `kind` with default hyperparameters, overriding the
/// seed and, for networks, the epoch count when given.
pub fn fit_kind(
    kind: ModelKind,
    data: &Dataset,
    target: Target,
    seed: u64,
    epochs: Option<usize>,
) -> Result<SurrogateModel, ModelError> {
    match kind {
        ModelKind::Linear => fit_polynomial(data, target, 1),
        ModelKind::Quartic => fit_polynomial(data, target, 4),
        ModelKind::Mlp => {
            let d = MlpHyper::default();
            fit_mlp(
                data,
                target,
                &MlpHyper {
                    seed,
                    epochs: epochs.unwrap_or(d.epochs),
                    ..d
                },
            )
        }
        ModelKind::Lstm => {
            let d = LstmHyper::default();
            fit_lstm(
                data,
                target,
                &LstmHyper {
                    seed,
                    epochs: epochs.unwrap_or(d.epochs),
                    ..d
                },
            )
        }
    }
}
