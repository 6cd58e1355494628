//! Gait kinematics, fin materials, cycle time histories and the electrical
//! power formula.
//!
//! Angles are degrees everywhere; radians appear only inside trig calls.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Supply voltage used for every test gait.
pub const SUPPLY_VOLTAGE: f64 = 4.98;

/// Canonical number of samples in one resampled flap cycle.
pub const CYCLE_STEPS: usize = 64;

/// Static envelope of the kinematic parameters: `(min, max)`.
pub const FREQUENCY_RANGE: (f64, f64) = (0.75, 2.0);
pub const STROKE_RANGE: (f64, f64) = (0.0, 55.0);
pub const PITCH_RANGE: (f64, f64) = (0.0, 55.0);
pub const SPO_RANGE: (f64, f64) = (-22.5, 45.0);

/// Tested gait levels. Their full product is 6 * 6 * 6 * 4 = 864 combinations.
pub const GRID_STROKES: [f64; 6] = [0.0, 15.0, 25.0, 32.5, 40.0, 55.0];
pub const GRID_PITCHES: [f64; 6] = [0.0, 15.0, 25.0, 32.0, 38.0, 55.0];
pub const GRID_FREQUENCIES: [f64; 6] = [0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
pub const GRID_SPOS: [f64; 4] = [-22.5, 0.0, 22.5, 45.0];

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("unknown fin material `{0}`")]
    UnknownMaterial(String),
    #[error("cycle series invalid: {0}")]
    InvalidSeries(String),
}

/// One periodic flapping motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Flap cycles per second (Hz).
    pub frequency: f64,
    /// Peak stroke angle (deg).
    pub stroke_amplitude: f64,
    /// Peak pitch angle (deg).
    pub pitch_amplitude: f64,
    /// Phase lead of pitch over stroke, degrees of cycle (22.5 = 1/16 cycle).
    pub stroke_pitch_offset: f64,
}

impl GaitParams {
    pub const fn new(frequency: f64, stroke: f64, pitch: f64, spo: f64) -> Self {
        Self {
            frequency,
            stroke_amplitude: stroke,
            pitch_amplitude: pitch,
            stroke_pitch_offset: spo,
        }
    }

    pub fn is_attainable(&self) -> bool {
        is_attainable(self)
    }

    /// Total order used for deterministic tie-breaking: (f, stroke, pitch, spo).
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.frequency
            .total_cmp(&other.frequency)
            .then(self.stroke_amplitude.total_cmp(&other.stroke_amplitude))
            .then(self.pitch_amplitude.total_cmp(&other.pitch_amplitude))
            .then(
                self.stroke_pitch_offset
                    .total_cmp(&other.stroke_pitch_offset),
            )
    }

    fn is_finite(&self) -> bool {
        self.frequency.is_finite()
            && self.stroke_amplitude.is_finite()
            && self.pitch_amplitude.is_finite()
            && self.stroke_pitch_offset.is_finite()
    }
}

impl fmt::Display for GaitParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "f={} Hz, stroke={} deg, pitch={} deg, spo={} deg",
            self.frequency, self.stroke_amplitude, self.pitch_amplitude, self.stroke_pitch_offset
        )
    }
}

/// Largest stroke amplitude (exclusive) reachable at `frequency`.
pub fn stroke_limit(frequency: f64) -> f64 {
    97.0 - 30.0 * frequency
}

/// Largest pitch amplitude (exclusive) reachable at `frequency`.
pub fn pitch_limit(frequency: f64) -> f64 {
    75.0 - 26.0 * frequency
}

/// Frequency-dependent amplitude limits of the actuators. Upper bounds are
/// strict; a zero amplitude is allowed.
pub fn is_attainable(g: &GaitParams) -> bool {
    g.is_finite()
        && g.stroke_amplitude >= 0.0
        && g.stroke_amplitude < stroke_limit(g.frequency)
        && g.pitch_amplitude >= 0.0
        && g.pitch_amplitude < pitch_limit(g.frequency)
}

/// Every attainable combination of the tested gait levels, in
/// (frequency, stroke, pitch, spo) order.
pub fn attainable_test_grid() -> Vec<GaitParams> {
    let mut out = Vec::new();
    for &f in &GRID_FREQUENCIES {
        for &s in &GRID_STROKES {
            for &p in &GRID_PITCHES {
                for &d in &GRID_SPOS {
                    let g = GaitParams::new(f, s, p, d);
                    if is_attainable(&g) {
                        out.push(g);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinMaterial {
    Rigid,
    #[serde(rename = "pdms_1_10")]
    Pdms1to10,
    #[serde(rename = "pdms_1_20")]
    Pdms1to20,
}

impl FinMaterial {
    pub const ALL: [FinMaterial; 3] = [
        FinMaterial::Rigid,
        FinMaterial::Pdms1to10,
        FinMaterial::Pdms1to20,
    ];

    /// Young's modulus in pascals.
    pub fn youngs_modulus(self) -> f64 {
        match self {
            FinMaterial::Rigid => 1.0e9,
            FinMaterial::Pdms1to10 => 850.0e3,
            FinMaterial::Pdms1to20 => 310.0e3,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            FinMaterial::Rigid => "rigid",
            FinMaterial::Pdms1to10 => "pdms_1_10",
            FinMaterial::Pdms1to20 => "pdms_1_20",
        }
    }
}

impl fmt::Display for FinMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FinMaterial {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rigid" => Ok(FinMaterial::Rigid),
            "pdms_1_10" | "pdms1to10" | "pdms-1-10" => Ok(FinMaterial::Pdms1to10),
            "pdms_1_20" | "pdms1to20" | "pdms-1-20" => Ok(FinMaterial::Pdms1to20),
            other => Err(DomainError::UnknownMaterial(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceAxis {
    Thrust,
    Lift,
    SideForce,
}

/// One flap cycle of uniformly spaced samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSeries {
    pub stroke_angle: Vec<f64>,
    pub pitch_angle: Vec<f64>,
    pub thrust: Vec<f64>,
    pub lift: Vec<f64>,
    pub side_force: Vec<f64>,
    pub stroke_current: Vec<f64>,
    pub pitch_current: Vec<f64>,
    pub voltage: f64,
}

impl CycleSeries {
    pub fn n_steps(&self) -> usize {
        self.thrust.len()
    }

    /// Checks the shape and sign invariants.
    pub fn validate(&self) -> Result<(), DomainError> {
        let n = self.thrust.len();
        if n < 2 {
            return Err(DomainError::InvalidSeries(format!(
                "n_steps = {n}, need at least 2"
            )));
        }
        let lens = [
            self.stroke_angle.len(),
            self.pitch_angle.len(),
            self.lift.len(),
            self.side_force.len(),
            self.stroke_current.len(),
            self.pitch_current.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(DomainError::InvalidSeries("channel lengths differ".into()));
        }
        if !(self.voltage > 0.0) {
            return Err(DomainError::InvalidSeries(format!(
                "voltage {} not positive",
                self.voltage
            )));
        }
        if self
            .stroke_current
            .iter()
            .chain(&self.pitch_current)
            .any(|&i| !(i >= 0.0))
        {
            return Err(DomainError::InvalidSeries("negative current".into()));
        }
        Ok(())
    }

    pub fn force(&self, axis: ForceAxis) -> &[f64] {
        match axis {
            ForceAxis::Thrust => &self.thrust,
            ForceAxis::Lift => &self.lift,
            ForceAxis::SideForce => &self.side_force,
        }
    }

    /// Instantaneous total electrical power at each sample.
    pub fn power_series(&self) -> Vec<f64> {
        self.stroke_current
            .iter()
            .zip(&self.pitch_current)
            .map(|(is, ip)| is * self.voltage + ip * self.voltage)
            .collect()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Cycle-mean electrical power of both actuators, `I_s * V + I_p * V`.
pub fn mean_power(series: &CycleSeries) -> f64 {
    mean(&series.power_series())
}

/// Cycle-mean power drawn by the stroke actuator alone.
pub fn mean_stroke_power(series: &CycleSeries) -> f64 {
    series
        .stroke_current
        .iter()
        .map(|i| i * series.voltage)
        .sum::<f64>()
        / series.n_steps() as f64
}

/// Cycle-mean power drawn by the pitch actuator alone.
pub fn mean_pitch_power(series: &CycleSeries) -> f64 {
    series
        .pitch_current
        .iter()
        .map(|i| i * series.voltage)
        .sum::<f64>()
        / series.n_steps() as f64
}

pub fn mean_force(series: &CycleSeries, axis: ForceAxis) -> f64 {
    mean(series.force(axis))
}

/// Sinusoidal stroke and pitch histories over one cycle, endpoint excluded.
///
/// `phi_k = stroke * sin(2 pi k / n)`, `theta_k = pitch * sin(2 pi k / n + spo)`.
pub fn gait_trajectory(g: &GaitParams, n_steps: usize) -> (Vec<f64>, Vec<f64>) {
    let lead = g.stroke_pitch_offset.to_radians();
    (0..n_steps)
        .map(|k| {
            let phase = 2.0 * PI * k as f64 / n_steps as f64;
            (
                g.stroke_amplitude * phase.sin(),
                g.pitch_amplitude * (phase + lead).sin(),
            )
        })
        .unzip()
}
