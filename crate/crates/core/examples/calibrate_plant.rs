//! Rescales the synthetic plant so its dense-grid extremes hit the reference
//! per-material maxima, then prints the calibrated coefficients and the
//! efficiency landscape diagnostics.
//!
//! cargo run --release -p finfom --example calibrate_plant

use finfom::dataio::{plant_mean_power, plant_mean_thrust, PlantConfig};
use finfom::domain::{FinMaterial, GaitParams};
use rayon::prelude::*;

const TARGETS: [(FinMaterial, f64, f64); 3] = [
    (FinMaterial::Rigid, 1.2, 7.6),
    (FinMaterial::Pdms1to10, 2.1, 7.5),
    (FinMaterial::Pdms1to20, 1.6, 7.5),
];

fn grid() -> Vec<GaitParams> {
    let mut out = Vec::new();
    for fi in 0..11 {
        let f = 0.75 + 0.125 * fi as f64;
        for si in 0..13 {
            let spo = -22.5 + 5.625 * si as f64;
            for s in 0..56 {
                for p in 0..56 {
                    let g = GaitParams::new(f, s as f64, p as f64, spo);
                    if g.is_attainable() {
                        out.push(g);
                    }
                }
            }
        }
    }
    out
}

struct Scan {
    max_thrust: f64,
    max_power: f64,
    best: (f64, GaitParams),
    eta_by_freq: Vec<f64>,
    eta_by_spo: Vec<f64>,
}

fn scan(m: FinMaterial, cfg: &PlantConfig, gaits: &[GaitParams]) -> Scan {
    let vals: Vec<(f64, f64)> = gaits
        .par_iter()
        .map(|g| (plant_mean_thrust(m, g, cfg), plant_mean_power(m, g, cfg)))
        .collect();
    let mut s = Scan {
        max_thrust: f64::MIN,
        max_power: f64::MIN,
        best: (f64::MIN, gaits[0]),
        eta_by_freq: vec![f64::MIN; 11],
        eta_by_spo: vec![f64::MIN; 13],
    };
    for (g, &(t, p)) in gaits.iter().zip(&vals) {
        s.max_thrust = s.max_thrust.max(t);
        s.max_power = s.max_power.max(p);
        let eta = t / p;
        if eta > s.best.0 {
            s.best = (eta, *g);
        }
        let fi = ((g.frequency - 0.75) / 0.125).round() as usize;
        let si = ((g.stroke_pitch_offset + 22.5) / 5.625).round() as usize;
        s.eta_by_freq[fi] = s.eta_by_freq[fi].max(eta);
        s.eta_by_spo[si] = s.eta_by_spo[si].max(eta);
    }
    s
}

fn main() {
    let gaits = grid();
    println!("attainable grid points: {}", gaits.len());
    let mut cfg = PlantConfig::default().noise_free();
    for (m, thrust, power) in TARGETS {
        // thrust is linear in its gain and power is homogeneous in (b, c, d, L)
        for _ in 0..3 {
            let s = scan(m, &cfg, &gaits);
            let c = cfg.materials.iter_mut().find(|c| c.material == m).unwrap();
            c.thrust_gain *= thrust / s.max_thrust;
            let k = power / s.max_power;
            c.stroke_power *= k;
            c.pitch_power *= k;
            c.idle_power *= k;
            c.actuator_power_limit *= k;
        }
        let s = scan(m, &cfg, &gaits);
        println!(
            "{m}: max thrust {:.6} N, max power {:.6} W",
            s.max_thrust, s.max_power
        );
        println!("  best eta {:.6} at {}", s.best.0, s.best.1);
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|e| format!("{e:.4}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        println!("  max eta by frequency: {}", fmt(&s.eta_by_freq));
        println!("  max eta by spo:       {}", fmt(&s.eta_by_spo));
    }
    println!("{}", cfg.to_json());
}
