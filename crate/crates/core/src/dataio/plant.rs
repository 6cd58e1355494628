//! Calibrated synthetic stand-in for the fin test rig.
//!
//! Per sample at cycle phase `psi`, with `x = stroke / 55` and `t = pitch / 55`:
//!
//! ```text
//! thrust  = a r(f) f^2 sin^2(psi) x g(pitch) h(spo)
//! g(p)    = g0 + (1 - g0) / (1 + ((p - p*) / w_p)^2)       peak at p*
//! h(spo)  = 1 - k (spo + 22.5) / 67.5                      mild SPO penalty
//! r(f)    = 1 + r_a / (1 + exp(-(f - f_r) / w_r))          flow-regime change
//! P_s     = 0.6 d f/2 + L tanh(r(f) (f/2) b x (pi/2) |cos psi| / L)
//! P_p     = 0.4 d f/2 + L tanh(r(f) (f/2) c w t (pi/2) |cos(psi + spo)| / L)
//! ```
//!
//! Below saturation the cycle-mean power is `(r(f) (b x + c w t) + d) f / 2`;
//! the `tanh` term is the actuator current limit. Currents are `P / V`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DataError, TrialRecord, PROTOCOL_CYCLES};
use crate::domain::{
    gait_trajectory, is_attainable, mean_force, mean_power, CycleSeries, FinMaterial, ForceAxis,
    GaitParams, CYCLE_STEPS, SUPPLY_VOLTAGE,
};

pub const PLANT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialCoefficients {
    pub material: FinMaterial,
    /// `a`, newtons at f = 1 Hz, full stroke, peak pitch response.
    pub thrust_gain: f64,
    /// `p*`, pitch amplitude of peak thrust response (deg).
    pub pitch_optimum_deg: f64,
    /// `w_p`, half width of the pitch response (deg).
    pub pitch_width_deg: f64,
    /// `g0`, thrust response far from `p*` relative to the peak.
    pub pitch_floor: f64,
    /// `k`, fractional thrust lost going from -22.5 to 45 deg SPO.
    pub spo_thrust_slope: f64,
    /// `b`, W.
    pub stroke_power: f64,
    /// `c`, W.
    pub pitch_power: f64,
    /// `w`, pitch power sensitivity.
    pub pitch_power_weight: f64,
    /// `d`, W.
    pub idle_power: f64,
    /// `L`, per-actuator saturation of the motion-dependent power (W).
    pub actuator_power_limit: f64,
    /// `r_a`, fractional load and thrust gain past the flow-regime change.
    pub regime_gain: f64,
    /// `f_r`, frequency of the flow-regime change (Hz).
    pub regime_onset_hz: f64,
    /// `w_r`, width of the flow-regime change (Hz).
    pub regime_width_hz: f64,
}

impl MaterialCoefficients {
    fn pitch_response(&self, pitch: f64) -> f64 {
        let u = (pitch - self.pitch_optimum_deg) / self.pitch_width_deg;
        self.pitch_floor + (1.0 - self.pitch_floor) / (1.0 + u * u)
    }

    fn spo_response(&self, spo: f64) -> f64 {
        1.0 - self.spo_thrust_slope * (spo + 22.5) / 67.5
    }

    fn regime_response(&self, frequency: f64) -> f64 {
        let z = (frequency - self.regime_onset_hz) / self.regime_width_hz;
        1.0 + self.regime_gain / (1.0 + (-z).exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub schema_version: u32,
    /// Noise standard deviation as a fraction of each channel's range.
    pub noise_std: f64,
    pub rng_seed: u64,
    /// Raw samples per flap cycle in generated trials.
    pub samples_per_cycle: usize,
    pub materials: Vec<MaterialCoefficients>,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            schema_version: PLANT_SCHEMA_VERSION,
            noise_std: 0.02,
            rng_seed: 42,
            samples_per_cycle: CYCLE_STEPS,
            materials: vec![
                MaterialCoefficients {
                    material: FinMaterial::Rigid,
                    thrust_gain: 0.6322,
                    pitch_optimum_deg: 20.0,
                    pitch_width_deg: 20.0,
                    pitch_floor: 0.4,
                    spo_thrust_slope: 0.06,
                    stroke_power: 9.66,
                    pitch_power: 3.22,
                    pitch_power_weight: 1.0,
                    idle_power: 1.288,
                    actuator_power_limit: 5.3666,
                    regime_gain: 0.45,
                    regime_onset_hz: 1.375,
                    regime_width_hz: 0.05,
                },
                MaterialCoefficients {
                    material: FinMaterial::Pdms1to10,
                    thrust_gain: 1.1372,
                    pitch_optimum_deg: 28.0,
                    pitch_width_deg: 25.0,
                    pitch_floor: 0.4,
                    spo_thrust_slope: 0.08,
                    stroke_power: 9.0346,
                    pitch_power: 3.3879,
                    pitch_power_weight: 0.8,
                    idle_power: 1.3552,
                    actuator_power_limit: 5.6466,
                    regime_gain: 0.45,
                    regime_onset_hz: 1.375,
                    regime_width_hz: 0.05,
                },
                MaterialCoefficients {
                    material: FinMaterial::Pdms1to20,
                    thrust_gain: 0.848,
                    pitch_optimum_deg: 24.0,
                    pitch_width_deg: 20.0,
                    pitch_floor: 0.4,
                    spo_thrust_slope: 0.07,
                    stroke_power: 11.5221,
                    pitch_power: 3.8407,
                    pitch_power_weight: 0.3,
                    idle_power: 1.5362,
                    actuator_power_limit: 6.4012,
                    regime_gain: 0.45,
                    regime_onset_hz: 1.375,
                    regime_width_hz: 0.05,
                },
            ],
        }
    }
}

impl PlantConfig {
    pub fn coefficients(&self, material: FinMaterial) -> &MaterialCoefficients {
        self.materials
            .iter()
            .find(|c| c.material == material)
            .unwrap_or_else(|| panic!("plant config has no coefficients for {material}"))
    }

    pub fn noise_free(&self) -> Self {
        Self {
            noise_std: 0.0,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plant config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let cfg: PlantConfig = serde_json::from_str(text)?;
        if cfg.schema_version != PLANT_SCHEMA_VERSION {
            return Err(DataError::Version {
                found: cfg.schema_version,
                expected: PLANT_SCHEMA_VERSION,
            });
        }
        Ok(cfg)
    }
}

fn saturate(u: f64, limit: f64) -> f64 {
    limit * (u / limit).tanh()
}

/// Noise-free single cycle of every channel, sampled at `n_steps` phases.
pub fn plant_series(
    material: FinMaterial,
    gait: &GaitParams,
    cfg: &PlantConfig,
    n_steps: usize,
) -> CycleSeries {
    let c = cfg.coefficients(material);
    let f = gait.frequency;
    let x = gait.stroke_amplitude / 55.0;
    let t = gait.pitch_amplitude / 55.0;
    let lead = gait.stroke_pitch_offset.to_radians();
    let regime = c.regime_response(f);
    let peak_thrust = c.thrust_gain
        * regime
        * f
        * f
        * x
        * c.pitch_response(gait.pitch_amplitude)
        * c.spo_response(gait.stroke_pitch_offset);
    let limit = c.actuator_power_limit;
    let half_f = 0.5 * f;

    let (stroke_angle, pitch_angle) = gait_trajectory(gait, n_steps);
    let mut s = CycleSeries {
        stroke_angle,
        pitch_angle,
        thrust: Vec::with_capacity(n_steps),
        lift: Vec::with_capacity(n_steps),
        side_force: Vec::with_capacity(n_steps),
        stroke_current: Vec::with_capacity(n_steps),
        pitch_current: Vec::with_capacity(n_steps),
        voltage: SUPPLY_VOLTAGE,
    };
    for k in 0..n_steps {
        let psi = 2.0 * PI * k as f64 / n_steps as f64;
        let (sin_s, cos_s) = psi.sin_cos();
        let (sin_p, cos_p) = (psi + lead).sin_cos();
        s.thrust.push(peak_thrust * sin_s * sin_s);
        s.lift.push(0.25 * peak_thrust * sin_s * sin_p);
        s.side_force.push(0.1 * peak_thrust * sin_s * cos_p);

        let stroke_motion = half_f * c.stroke_power * x * FRAC_PI_2 * cos_s.abs();
        let pitch_motion =
            half_f * c.pitch_power * c.pitch_power_weight * t * FRAC_PI_2 * cos_p.abs();
        let p_stroke = 0.6 * c.idle_power * half_f + saturate(regime * stroke_motion, limit);
        let p_pitch = 0.4 * c.idle_power * half_f + saturate(regime * pitch_motion, limit);
        s.stroke_current.push(p_stroke / SUPPLY_VOLTAGE);
        s.pitch_current.push(p_pitch / SUPPLY_VOLTAGE);
    }
    s
}

/// Noise-free cycle-mean thrust (N) at the canonical resolution.
pub fn plant_mean_thrust(material: FinMaterial, gait: &GaitParams, cfg: &PlantConfig) -> f64 {
    mean_force(
        &plant_series(material, gait, cfg, CYCLE_STEPS),
        ForceAxis::Thrust,
    )
}

/// Noise-free cycle-mean electrical power (W) at the canonical resolution.
pub fn plant_mean_power(material: FinMaterial, gait: &GaitParams, cfg: &PlantConfig) -> f64 {
    mean_power(&plant_series(material, gait, cfg, CYCLE_STEPS))
}

fn trial_seed(cfg: &PlantConfig, material: FinMaterial, gait: &GaitParams) -> u64 {
    let mut h = Sha256::new();
    h.update(cfg.rng_seed.to_le_bytes());
    h.update(material.id().as_bytes());
    for v in [
        gait.frequency,
        gait.stroke_amplitude,
        gait.pitch_amplitude,
        gait.stroke_pitch_offset,
    ] {
        h.update(v.to_bits().to_le_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Ten cycles of every channel for one gait, with seeded Gaussian noise.
///
/// Noise on each channel has standard deviation `noise_std` times that
/// channel's noise-free range; currents are clamped at zero afterwards.
pub fn synth_trial(
    material: FinMaterial,
    gait: &GaitParams,
    cfg: &PlantConfig,
) -> Result<TrialRecord, DataError> {
    if !is_attainable(gait) {
        return Err(DataError::UnattainableGait(*gait));
    }
    let spc = cfg.samples_per_cycle;
    let cycle = plant_series(material, gait, cfg, spc);
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg, material, gait));

    let mut channel = |one: &[f64], clamp_at_zero: bool| -> Vec<f64> {
        let (lo, hi) = one
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let sigma = cfg.noise_std * (hi - lo);
        let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
        (0..PROTOCOL_CYCLES)
            .flat_map(|_| one.iter().copied())
            .map(|v| {
                let noisy = match &noise {
                    Some(n) => v + n.sample(&mut rng),
                    None => v,
                };
                if clamp_at_zero {
                    noisy.max(0.0)
                } else {
                    noisy
                }
            })
            .collect()
    };

    let samples = CycleSeries {
        stroke_angle: channel(&cycle.stroke_angle, false),
        pitch_angle: channel(&cycle.pitch_angle, false),
        thrust: channel(&cycle.thrust, false),
        lift: channel(&cycle.lift, false),
        side_force: channel(&cycle.side_force, false),
        stroke_current: channel(&cycle.stroke_current, true),
        pitch_current: channel(&cycle.pitch_current, true),
        voltage: cycle.voltage,
    };
    Ok(TrialRecord {
        material,
        gait: *gait,
        sample_rate: spc as f64 * gait.frequency,
        n_cycles: PROTOCOL_CYCLES,
        samples,
    })
}

/// One trial per gait, in the given order. Trials are generated in parallel;
/// each draws from its own seed so the result does not depend on scheduling.
pub fn synth_trials(
    material: FinMaterial,
    gaits: &[GaitParams],
    cfg: &PlantConfig,
) -> Result<Vec<TrialRecord>, DataError> {
    use rayon::prelude::*;
    gaits
        .par_iter()
        .map(|g| synth_trial(material, g, cfg))
        .collect()
}
