use super::{DataError, TrialRecord};
use crate::domain::CycleSeries;

/// First and last (inclusive) cycle kept for analysis out of ten.
const FIRST_KEPT: usize = 2;
const LAST_KEPT: usize = 6;

/// Phase-averages the middle five cycles of a record and resamples the
/// result to `n_steps` samples with periodic linear interpolation.
pub fn segment_cycles(rec: &TrialRecord, n_steps: usize) -> Result<CycleSeries, DataError> {
    if rec.n_cycles <= LAST_KEPT {
        return Err(DataError::TooFewCycles {
            got: rec.n_cycles,
            need: LAST_KEPT + 1,
        });
    }
    let total = rec.samples.n_steps();
    let spc = total / rec.n_cycles;
    if spc == 0 || spc * rec.n_cycles != total {
        return Err(DataError::InconsistentGroup {
            material: rec.material,
            gait: rec.gait,
            reason: format!("{total} samples do not split into {} cycles", rec.n_cycles),
        });
    }

    let average = |channel: &[f64]| -> Vec<f64> {
        let kept = (LAST_KEPT - FIRST_KEPT + 1) as f64;
        let cycle: Vec<f64> = (0..spc)
            .map(|j| {
                (FIRST_KEPT..=LAST_KEPT)
                    .map(|c| channel[c * spc + j])
                    .sum::<f64>()
                    / kept
            })
            .collect();
        resample_periodic(&cycle, n_steps)
    };

    let s = &rec.samples;
    Ok(CycleSeries {
        stroke_angle: average(&s.stroke_angle),
        pitch_angle: average(&s.pitch_angle),
        thrust: average(&s.thrust),
        lift: average(&s.lift),
        side_force: average(&s.side_force),
        stroke_current: average(&s.stroke_current),
        pitch_current: average(&s.pitch_current),
        voltage: s.voltage,
    })
}

fn resample_periodic(cycle: &[f64], n_steps: usize) -> Vec<f64> {
    let m = cycle.len();
    if m == n_steps {
        return cycle.to_vec();
    }
    (0..n_steps)
        .map(|k| {
            let pos = k as f64 * m as f64 / n_steps as f64;
            let i = pos.floor() as usize % m;
            let frac = pos - pos.floor();
            let next = cycle[(i + 1) % m];
            cycle[i] + frac * (next - cycle[i])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::PROTOCOL_CYCLES;
    use crate::domain::{FinMaterial, GaitParams};

    fn record_from_thrust(thrust: Vec<f64>, n_cycles: usize) -> TrialRecord {
        let n = thrust.len();
        TrialRecord {
            material: FinMaterial::Rigid,
            gait: GaitParams::new(1.0, 25.0, 15.0, 0.0),
            sample_rate: (n / n_cycles) as f64,
            n_cycles,
            samples: CycleSeries {
                stroke_angle: vec![0.0; n],
                pitch_angle: vec![0.0; n],
                thrust,
                lift: vec![0.0; n],
                side_force: vec![0.0; n],
                stroke_current: vec![0.1; n],
                pitch_current: vec![0.1; n],
                voltage: 4.98,
            },
        }
    }

    #[test]
    fn identical_cycles_average_to_themselves() {
        let rec = record_from_thrust(vec![1.0; 10 * 16], PROTOCOL_CYCLES);
        let s = segment_cycles(&rec, 64).unwrap();
        assert_eq!(s.n_steps(), 64);
        assert!(s.thrust.iter().all(|&t| (t - 1.0).abs() < 1e-15));
        assert_eq!(s.voltage, 4.98);
    }

    #[test]
    fn corrupted_edge_cycles_are_ignored() {
        let spc = 8;
        let mut thrust = vec![0.0; 10 * spc];
        for c in 0..10 {
            for j in 0..spc {
                thrust[c * spc + j] = if (2..=6).contains(&c) {
                    // five clean cycles, each slightly different
                    j as f64 * 0.1 + c as f64 * 0.01
                } else {
                    1e6 * (j as f64 + 1.0)
                };
            }
        }
        let s = segment_cycles(&record_from_thrust(thrust, 10), spc).unwrap();
        for j in 0..spc {
            let hand = (2..=6)
                .map(|c| j as f64 * 0.1 + c as f64 * 0.01)
                .sum::<f64>()
                / 5.0;
            assert!((s.thrust[j] - hand).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_cycles() {
        let rec = record_from_thrust(vec![1.0; 5 * 8], 5);
        assert!(matches!(
            segment_cycles(&rec, 8),
            Err(DataError::TooFewCycles { got: 5, need: 7 })
        ));
    }

    #[test]
    fn resampling_interpolates_between_samples() {
        let cycle = [0.0, 1.0, 0.0, -1.0];
        let out = resample_periodic(&cycle, 8);
        let want = [0.0, 0.5, 1.0, 0.5, 0.0, -0.5, -1.0, -0.5];
        assert_eq!(out, want);
    }

    #[test]
    fn resegmenting_a_tiled_cycle_is_idempotent() {
        let cycle: Vec<f64> = (0..64).map(|k| (k as f64 * 0.37).sin() * 2.0).collect();
        let tiled: Vec<f64> = (0..10).flat_map(|_| cycle.iter().copied()).collect();
        let s = segment_cycles(&record_from_thrust(tiled, 10), 64).unwrap();
        for (a, b) in s.thrust.iter().zip(&cycle) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
