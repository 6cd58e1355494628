//! Trial files, cycle segmentation, the synthetic plant and dataset assembly.

mod dataset;
mod plant;
mod segment;
mod trials;

pub use dataset::{build_dataset, Dataset, DatasetRecord, FeatureBounds, DATASET_SCHEMA_VERSION};
pub use plant::{
    plant_mean_power, plant_mean_thrust, plant_series, synth_trial, synth_trials,
    MaterialCoefficients, PlantConfig, PLANT_SCHEMA_VERSION,
};
pub use segment::segment_cycles;
pub use trials::{
    load_trials, read_trials, write_trials, write_trials_to, TrialRecord, PROTOCOL_CYCLES,
    TRIAL_CSV_HEADER,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::domain::{FinMaterial, GaitParams};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("inconsistent trial group {material} / {gait}: {reason}")]
    InconsistentGroup {
        material: FinMaterial,
        gait: GaitParams,
        reason: String,
    },
    #[error("gait is not attainable: {0}")]
    UnattainableGait(GaitParams),
    #[error("record has {got} cycles, segmentation needs at least {need}")]
    TooFewCycles { got: usize, need: usize },
    #[error("schema version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}
