//! Figure-of-merit family: force times reference velocity over electrical
//! power, overall, per force axis and per actuator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    mean_force, mean_pitch_power, mean_power, mean_stroke_power, CycleSeries, ForceAxis, GaitParams,
};
use crate::surrogate::{ModelError, Predictor};

/// Mean powers at or below this (W) are treated as idle.
pub const ZERO_POWER_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FomError {
    #[error("mean power {0} W is not positive")]
    ZeroPower(f64),
    #[error("{actuator:?} actuator mean power {power} W is not positive")]
    ZeroActuatorPower { actuator: Actuator, power: f64 },
    #[error("reference velocity must be finite and non-negative, got {0}")]
    InvalidVelocity(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actuator {
    Stroke,
    Pitch,
}

fn check_power(p: f64) -> Result<(), FomError> {
    if p > ZERO_POWER_EPS {
        Ok(())
    } else {
        Err(FomError::ZeroPower(p))
    }
}

fn check_velocity(v: f64) -> Result<(), FomError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(FomError::InvalidVelocity(v))
    }
}

/// Force per unit power, `F / P`.
pub fn fom_basic(mean_force: f64, mean_power: f64) -> Result<f64, FomError> {
    check_power(mean_power)?;
    Ok(mean_force / mean_power)
}

/// Dimensionless efficiency `F v / P`. At `v = 1` this is bitwise equal to
/// [`fom_basic`].
pub fn fom(mean_force: f64, mean_power: f64, velocity: f64) -> Result<f64, FomError> {
    check_power(mean_power)?;
    check_velocity(velocity)?;
    Ok(mean_force * velocity / mean_power)
}

/// The velocity `F / P` at which [`fom`] is evaluated when no explicit flow
/// speed is available.
pub fn characteristic_velocity(mean_force: f64, mean_power: f64) -> Result<f64, FomError> {
    fom_basic(mean_force, mean_power)
}

/// Efficiency of one force axis against total electrical power.
pub fn fom_axis(series: &CycleSeries, axis: ForceAxis, velocity: f64) -> Result<f64, FomError> {
    fom(mean_force(series, axis), mean_power(series), velocity)
}

/// Efficiency of one force axis against a single actuator's power.
pub fn fom_actuator(
    series: &CycleSeries,
    actuator: Actuator,
    axis: ForceAxis,
    velocity: f64,
) -> Result<f64, FomError> {
    let power = match actuator {
        Actuator::Stroke => mean_stroke_power(series),
        Actuator::Pitch => mean_pitch_power(series),
    };
    if power <= ZERO_POWER_EPS {
        return Err(FomError::ZeroActuatorPower { actuator, power });
    }
    check_velocity(velocity)?;
    Ok(mean_force(series, axis) * velocity / power)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomReport {
    pub eta: f64,
    pub eta_thrust: f64,
    pub eta_lift: Option<f64>,
    pub eta_side: Option<f64>,
    #[serde(rename = "eta_stroke_act")]
    pub eta_stroke_actuator: Option<f64>,
    #[serde(rename = "eta_pitch_act")]
    pub eta_pitch_actuator: Option<f64>,
    #[serde(rename = "mean_force_n")]
    pub mean_force: f64,
    #[serde(rename = "mean_power_w")]
    pub mean_power: f64,
    #[serde(rename = "velocity_mps")]
    pub reference_velocity: f64,
}

/// Report from a thrust and a power predictor. Lift, side force and
/// per-actuator powers are not predicted, so those fields are absent.
pub fn fom_report(
    thrust_model: &dyn Predictor,
    power_model: &dyn Predictor,
    gait: &GaitParams,
    velocity: f64,
) -> Result<FomReport, FomError> {
    let force = thrust_model.predict_mean(gait)?;
    let power = power_model.predict_mean(gait)?;
    let eta = fom(force, power, velocity)?;
    Ok(FomReport {
        eta,
        eta_thrust: eta,
        eta_lift: None,
        eta_side: None,
        eta_stroke_actuator: None,
        eta_pitch_actuator: None,
        mean_force: force,
        mean_power: power,
        reference_velocity: velocity,
    })
}

/// Report from a measured cycle, with thrust as the force of interest.
/// Per-actuator fields are absent when that actuator draws no power.
pub fn fom_report_from_series(series: &CycleSeries, velocity: f64) -> Result<FomReport, FomError> {
    let force = mean_force(series, ForceAxis::Thrust);
    let power = mean_power(series);
    let eta = fom(force, power, velocity)?;
    let actuator = |a| fom_actuator(series, a, ForceAxis::Thrust, velocity).ok();
    Ok(FomReport {
        eta,
        eta_thrust: eta,
        eta_lift: Some(fom_axis(series, ForceAxis::Lift, velocity)?),
        eta_side: Some(fom_axis(series, ForceAxis::SideForce, velocity)?),
        eta_stroke_actuator: actuator(Actuator::Stroke),
        eta_pitch_actuator: actuator(Actuator::Pitch),
        mean_force: force,
        mean_power: power,
        reference_velocity: velocity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(thrust: f64, stroke_current: f64, pitch_current: f64, voltage: f64) -> CycleSeries {
        let n = 4;
        CycleSeries {
            stroke_angle: vec![0.0; n],
            pitch_angle: vec![0.0; n],
            thrust: vec![thrust; n],
            lift: vec![0.0; n],
            side_force: vec![0.0; n],
            stroke_current: vec![stroke_current; n],
            pitch_current: vec![pitch_current; n],
            voltage,
        }
    }

    #[test]
    fn basic_examples() {
        assert_eq!(fom_basic(1.0, 1.0).unwrap(), 1.0);
        assert!((fom_basic(2.1, 7.5).unwrap() - 0.28).abs() < 1e-12);
        assert!(matches!(fom_basic(0.0, 0.0), Err(FomError::ZeroPower(_))));
        assert!(matches!(fom_basic(1.0, 1e-10), Err(FomError::ZeroPower(_))));
    }

    #[test]
    fn velocity_examples() {
        assert!((fom(1.6, 7.1, 1.0).unwrap() - 0.2254).abs() < 5e-5);
        assert_eq!(fom(1.6, 7.1, 0.0).unwrap(), 0.0);
        assert_eq!(
            fom(1.6, 7.1, 0.8).unwrap() * 2.0,
            fom(1.6, 7.1, 1.6).unwrap()
        );
        assert!(matches!(
            fom(1.0, 1.0, -1.0),
            Err(FomError::InvalidVelocity(_))
        ));
        assert_eq!(characteristic_velocity(3.0, 2.0).unwrap(), 1.5);
    }

    #[test]
    fn axis_examples() {
        let s = fixture(1.0, 0.4, 0.1, 5.0);
        assert_eq!(fom_axis(&s, ForceAxis::Lift, 1.0).unwrap(), 0.0);
        assert_eq!(fom_axis(&s, ForceAxis::SideForce, 1.0).unwrap(), 0.0);
        let mut two = fixture(1.0, 0.2, 0.2, 5.0);
        two.thrust = vec![1.0, 1.0];
        two.lift = vec![1.0, 1.0];
        two.side_force = vec![0.0, 0.0];
        two.stroke_angle.truncate(2);
        two.pitch_angle.truncate(2);
        two.stroke_current = vec![0.2, 0.2];
        two.pitch_current = vec![0.2, 0.2];
        // P = 0.4 A * 5 V = 2 W
        assert_eq!(fom_axis(&two, ForceAxis::Thrust, 1.0).unwrap(), 0.5);
        assert_eq!(
            fom_axis(&two, ForceAxis::Thrust, 1.0).unwrap(),
            fom_axis(&two, ForceAxis::Lift, 1.0).unwrap()
        );
    }

    #[test]
    fn actuator_examples() {
        let s = fixture(1.0, 0.4, 0.1, 5.0);
        let stroke = fom_actuator(&s, Actuator::Stroke, ForceAxis::Thrust, 1.0).unwrap();
        let pitch = fom_actuator(&s, Actuator::Pitch, ForceAxis::Thrust, 1.0).unwrap();
        assert!((stroke - 0.5).abs() < 1e-12);
        assert!((pitch - 2.0).abs() < 1e-12);
        let total = fom_axis(&s, ForceAxis::Thrust, 1.0).unwrap();
        assert!((1.0 / stroke + 1.0 / pitch - 1.0 / total).abs() < 1e-12);

        let idle_pitch = fixture(1.0, 0.4, 0.0, 5.0);
        assert!(matches!(
            fom_actuator(&idle_pitch, Actuator::Pitch, ForceAxis::Thrust, 1.0),
            Err(FomError::ZeroActuatorPower {
                actuator: Actuator::Pitch,
                ..
            })
        ));
        assert_eq!(
            fom_actuator(&idle_pitch, Actuator::Stroke, ForceAxis::Thrust, 1.0).unwrap(),
            fom_axis(&idle_pitch, ForceAxis::Thrust, 1.0).unwrap()
        );

        let even = fixture(1.0, 0.3, 0.3, 5.0);
        let eta = fom_axis(&even, ForceAxis::Thrust, 1.0).unwrap();
        for a in [Actuator::Stroke, Actuator::Pitch] {
            assert!(
                (fom_actuator(&even, a, ForceAxis::Thrust, 1.0).unwrap() - 2.0 * eta).abs() < 1e-12
            );
        }
    }

    #[test]
    fn report_serializes_with_stable_names() {
        let r = fom_report_from_series(&fixture(1.0, 0.4, 0.0, 5.0), 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            [
                "eta",
                "eta_lift",
                "eta_pitch_act",
                "eta_side",
                "eta_stroke_act",
                "eta_thrust",
                "mean_force_n",
                "mean_power_w",
                "velocity_mps"
            ]
        );
        assert!(v["eta_pitch_act"].is_null());
    }
}
