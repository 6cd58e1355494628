use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{segment_cycles, DataError, TrialRecord};
use crate::domain::{
    is_attainable, mean_force, mean_power, CycleSeries, FinMaterial, ForceAxis, GaitParams,
    FREQUENCY_RANGE, PITCH_RANGE, SPO_RANGE, STROKE_RANGE,
};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Min-max bounds for the four gait features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureBounds {
    pub frequency: (f64, f64),
    pub stroke: (f64, f64),
    pub pitch: (f64, f64),
    pub spo: (f64, f64),
}

impl Default for FeatureBounds {
    fn default() -> Self {
        Self {
            frequency: FREQUENCY_RANGE,
            stroke: STROKE_RANGE,
            pitch: PITCH_RANGE,
            spo: SPO_RANGE,
        }
    }
}

fn unit(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

impl FeatureBounds {
    /// `(f, stroke, pitch, spo)` mapped to `[0, 1]`; degenerate ranges map to 0.
    pub fn normalize(&self, g: &GaitParams) -> [f64; 4] {
        [
            unit(g.frequency, self.frequency),
            unit(g.stroke_amplitude, self.stroke),
            unit(g.pitch_amplitude, self.pitch),
            unit(g.stroke_pitch_offset, self.spo),
        ]
    }

    /// Instantaneous angles mapped to `[0, 1]` over `[-max, max]`.
    pub fn normalize_angles(&self, stroke_angle: f64, pitch_angle: f64) -> [f64; 2] {
        [
            unit(stroke_angle, (-self.stroke.1, self.stroke.1)),
            unit(pitch_angle, (-self.pitch.1, self.pitch.1)),
        ]
    }

    fn covers(&self, g: &GaitParams) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(g.frequency, self.frequency)
            && inside(g.stroke_amplitude, self.stroke)
            && inside(g.pitch_amplitude, self.pitch)
            && inside(g.stroke_pitch_offset, self.spo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub material: FinMaterial,
    pub gait: GaitParams,
    pub series: CycleSeries,
}

impl DatasetRecord {
    pub fn mean_thrust(&self) -> f64 {
        mean_force(&self.series, ForceAxis::Thrust)
    }

    pub fn mean_power(&self) -> f64 {
        mean_power(&self.series)
    }
}

/// Segmented single-cycle records ordered by (material, f, stroke, pitch, spo).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema_version: u32,
    pub normalization: FeatureBounds,
    pub records: Vec<DatasetRecord>,
}

impl Dataset {
    pub fn from_records(mut records: Vec<DatasetRecord>) -> Self {
        records.sort_by(|a, b| a.material.cmp(&b.material).then(a.gait.lex_cmp(&b.gait)));
        Self {
            schema_version: DATASET_SCHEMA_VERSION,
            normalization: FeatureBounds::default(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn materials(&self) -> Vec<FinMaterial> {
        let mut ms: Vec<FinMaterial> = self.records.iter().map(|r| r.material).collect();
        ms.dedup();
        ms
    }

    pub fn for_material(&self, material: FinMaterial) -> Dataset {
        self.filter(|r| r.material == material)
    }

    pub fn filter(&self, keep: impl Fn(&DatasetRecord) -> bool) -> Dataset {
        Dataset {
            schema_version: self.schema_version,
            normalization: self.normalization,
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    pub fn gaits(&self) -> Vec<GaitParams> {
        self.records.iter().map(|r| r.gait).collect()
    }

    pub fn find(&self, gait: &GaitParams) -> Option<&DatasetRecord> {
        self.records.iter().find(|r| r.gait == *gait)
    }

    /// Splits off every gait whose stroke and pitch both lie strictly inside
    /// the range of levels tested at its frequency, so each held-out gait is
    /// surrounded by training gaits. Returns `(train, holdout)`.
    pub fn interior_split(&self) -> (Dataset, Dataset) {
        let mut ranges: Vec<(f64, (f64, f64), (f64, f64))> = Vec::new();
        for r in &self.records {
            let g = &r.gait;
            match ranges.iter_mut().find(|(f, ..)| *f == g.frequency) {
                Some((_, s, p)) => {
                    *s = (s.0.min(g.stroke_amplitude), s.1.max(g.stroke_amplitude));
                    *p = (p.0.min(g.pitch_amplitude), p.1.max(g.pitch_amplitude));
                }
                None => ranges.push((
                    g.frequency,
                    (g.stroke_amplitude, g.stroke_amplitude),
                    (g.pitch_amplitude, g.pitch_amplitude),
                )),
            }
        }
        let interior = |r: &DatasetRecord| {
            let inside = |v: f64, (lo, hi): (f64, f64)| v > lo && v < hi;
            let (_, s, p) = ranges
                .iter()
                .find(|(f, ..)| *f == r.gait.frequency)
                .expect("frequency seen above");
            inside(r.gait.stroke_amplitude, *s) && inside(r.gait.pitch_amplitude, *p)
        };
        (self.filter(|r| !interior(r)), self.filter(interior))
    }

    /// Checks the attainability and bounds-coverage invariants.
    pub fn validate(&self) -> Result<(), DataError> {
        for r in &self.records {
            if !is_attainable(&r.gait) || !self.normalization.covers(&r.gait) {
                return Err(DataError::UnattainableGait(r.gait));
            }
        }
        Ok(())
    }

    /// SHA-256 over the exact bits of every record, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.records {
            h.update(r.material.id().as_bytes());
            let g = r.gait;
            let s = &r.series;
            let scalars = [
                g.frequency,
                g.stroke_amplitude,
                g.pitch_amplitude,
                g.stroke_pitch_offset,
                s.voltage,
            ];
            let channels = [
                &s.stroke_angle,
                &s.pitch_angle,
                &s.thrust,
                &s.lift,
                &s.side_force,
                &s.stroke_current,
                &s.pitch_current,
            ];
            for v in scalars.iter().chain(channels.into_iter().flatten()) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let ds: Dataset = serde_json::from_str(text)?;
        if ds.schema_version != DATASET_SCHEMA_VERSION {
            return Err(DataError::Version {
                found: ds.schema_version,
                expected: DATASET_SCHEMA_VERSION,
            });
        }
        Ok(ds)
    }
}

/// Segments every trial into one `n_steps` cycle and sorts the result.
pub fn build_dataset(trials: &[TrialRecord], n_steps: usize) -> Result<Dataset, DataError> {
    let mut seen = HashSet::new();
    let mut records = Vec::with_capacity(trials.len());
    for t in trials {
        if !is_attainable(&t.gait) {
            return Err(DataError::UnattainableGait(t.gait));
        }
        let key = (
            t.material,
            t.gait.frequency.to_bits(),
            t.gait.stroke_amplitude.to_bits(),
            t.gait.pitch_amplitude.to_bits(),
            t.gait.stroke_pitch_offset.to_bits(),
        );
        if !seen.insert(key) {
            return Err(DataError::InconsistentGroup {
                material: t.material,
                gait: t.gait,
                reason: "duplicate trial".into(),
            });
        }
        records.push(DatasetRecord {
            material: t.material,
            gait: t.gait,
            series: segment_cycles(t, n_steps)?,
        });
    }
    let ds = Dataset::from_records(records);
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_trial, PlantConfig};
    use crate::domain::{
        attainable_test_grid, GRID_FREQUENCIES, GRID_PITCHES, GRID_SPOS, GRID_STROKES,
    };

    #[test]
    fn empty_trials_give_empty_dataset() {
        let ds = build_dataset(&[], 64).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn single_trial() {
        let cfg = PlantConfig::default();
        let t = synth_trial(
            FinMaterial::Rigid,
            &GaitParams::new(1.0, 25.0, 15.0, 0.0),
            &cfg,
        )
        .unwrap();
        let ds = build_dataset(&[t], 64).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records[0].series.n_steps(), 64);
        let feats = ds.normalization.normalize(&ds.records[0].gait);
        assert!(feats.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn degenerate_bounds_map_to_zero() {
        let b = FeatureBounds {
            frequency: (1.0, 1.0),
            ..FeatureBounds::default()
        };
        assert_eq!(
            b.normalize(&GaitParams::new(1.0, 55.0, 0.0, -22.5)),
            [0.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn full_grid_dataset_matches_attainable_enumeration() {
        // independent count straight from the inequalities
        let mut expected = 0;
        for &f in &GRID_FREQUENCIES {
            for &s in &GRID_STROKES {
                for &p in &GRID_PITCHES {
                    if s < 97.0 - 30.0 * f && p < 75.0 - 26.0 * f {
                        expected += GRID_SPOS.len();
                    }
                }
            }
        }
        assert_eq!(expected, 556);
        let cfg = PlantConfig {
            samples_per_cycle: 16,
            ..PlantConfig::default()
        };
        let gaits = attainable_test_grid();
        assert_eq!(gaits.len(), expected);
        let trials: Vec<_> = gaits
            .iter()
            .map(|g| synth_trial(FinMaterial::Pdms1to10, g, &cfg).unwrap())
            .collect();
        let ds = build_dataset(&trials, 64).unwrap();
        assert_eq!(ds.len(), expected);
        let (train, hold) = ds.interior_split();
        assert_eq!(train.len() + hold.len(), expected);
        assert!(hold
            .records
            .iter()
            .all(|r| r.gait.stroke_amplitude > 0.0 && r.gait.pitch_amplitude < 55.0));
    }

    #[test]
    fn records_sorted_and_hash_stable() {
        let cfg = PlantConfig::default();
        let gaits = [
            GaitParams::new(1.5, 15.0, 0.0, 0.0),
            GaitParams::new(0.75, 40.0, 25.0, 45.0),
        ];
        let trials: Vec<_> = gaits
            .iter()
            .map(|g| synth_trial(FinMaterial::Rigid, g, &cfg).unwrap())
            .collect();
        let ds = build_dataset(&trials, 64).unwrap();
        assert_eq!(ds.records[0].gait.frequency, 0.75);
        let rev: Vec<_> = trials.into_iter().rev().collect();
        let ds2 = build_dataset(&rev, 64).unwrap();
        assert_eq!(ds.content_hash(), ds2.content_hash());
        assert_eq!(Dataset::from_json(&ds.to_json()).unwrap(), ds);
    }
}
