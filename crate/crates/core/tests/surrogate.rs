use std::sync::OnceLock;

use finfom::dataio::{build_dataset, synth_trials, Dataset, DatasetRecord, PlantConfig};
use finfom::domain::{
    attainable_test_grid, CycleSeries, FinMaterial, GaitParams, CYCLE_STEPS, SUPPLY_VOLTAGE,
};
use finfom::surrogate::{
    evaluate, fit_lstm, fit_mlp, fit_polynomial, predict_mean, predict_series, LstmHyper, MlpHyper,
    SurrogateModel, Target,
};

/// Dataset over the test grid whose cycle-mean power is `y(gait)`.
fn synthetic(mut y: impl FnMut(&GaitParams) -> f64) -> Dataset {
    let records = attainable_test_grid()
        .into_iter()
        .map(|gait| {
            let n = 8;
            DatasetRecord {
                material: FinMaterial::Rigid,
                gait,
                series: CycleSeries {
                    stroke_angle: vec![0.0; n],
                    pitch_angle: vec![0.0; n],
                    thrust: vec![0.0; n],
                    lift: vec![0.0; n],
                    side_force: vec![0.0; n],
                    stroke_current: vec![y(&gait) / SUPPLY_VOLTAGE; n],
                    pitch_current: vec![0.0; n],
                    voltage: SUPPLY_VOLTAGE,
                },
            }
        })
        .collect();
    Dataset::from_records(records)
}

fn stroke_norm(g: &GaitParams) -> f64 {
    g.stroke_amplitude / 55.0
}

fn mae(model: &SurrogateModel, data: &Dataset) -> f64 {
    evaluate(model, data, &data.gaits())
        .unwrap()
        .mean_absolute_error
}

fn noise_free_plant() -> &'static Dataset {
    static DATA: OnceLock<Dataset> = OnceLock::new();
    DATA.get_or_init(|| {
        let cfg = PlantConfig::default().noise_free();
        build_dataset(
            &synth_trials(FinMaterial::Pdms1to10, &attainable_test_grid(), &cfg).unwrap(),
            CYCLE_STEPS,
        )
        .unwrap()
    })
}

#[test]
fn linear_recovers_affine_coefficients() {
    let data = synthetic(|g| 2.0 * stroke_norm(g) + 0.5);
    let m = fit_polynomial(&data, Target::Power, 1).unwrap();
    // constant, then frequency, stroke, pitch, SPO
    let want = [0.5, 0.0, 2.0, 0.0, 0.0];
    for (got, want) in m.params.iter().zip(want) {
        assert!((got - want).abs() <= 1e-6, "{:?}", m.params);
    }
}

#[test]
fn quartic_recovers_fourth_power() {
    let data = synthetic(|g| stroke_norm(g).powi(4));
    assert!(mae(&fit_polynomial(&data, Target::Power, 4).unwrap(), &data) <= 1e-6);
}

#[test]
fn quartic_beats_linear_on_sine() {
    let data = synthetic(|g| (3.0 * stroke_norm(g)).sin());
    let lin = mae(&fit_polynomial(&data, Target::Power, 1).unwrap(), &data);
    let quart = mae(&fit_polynomial(&data, Target::Power, 4).unwrap(), &data);
    assert!(quart < lin, "quartic {quart} vs linear {lin}");
}

#[test]
fn polynomial_of_constant_is_constant() {
    let data = synthetic(|_| 3.25);
    let m = fit_polynomial(&data, Target::Power, 4).unwrap();
    for g in [
        GaitParams::new(0.8, 3.0, 50.0, 40.0),
        GaitParams::new(1.9, 30.0, 10.0, -20.0),
    ] {
        assert!((predict_mean(&m, &g).unwrap() - 3.25).abs() < 1e-9);
    }
}

#[test]
fn mlp_matches_linear_model_on_noisy_linear_data() {
    let mut k = 0u64;
    let data = synthetic(|g| {
        // deterministic pseudo-noise of amplitude 0.05
        k = k
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        1.0 + 0.8 * stroke_norm(g) - 0.3 * g.frequency
            + 0.05 * ((k >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
    });
    let lin = mae(&fit_polynomial(&data, Target::Power, 1).unwrap(), &data);
    let mlp = mae(
        &fit_mlp(&data, Target::Power, &MlpHyper::default()).unwrap(),
        &data,
    );
    assert!(mlp <= 2.0 * lin, "mlp {mlp} vs linear {lin}");
}

#[test]
fn untrained_mlp_sits_at_baseline_error() {
    let data = synthetic(|g| 1.0 + stroke_norm(g) * g.frequency);
    let m = fit_mlp(
        &data,
        Target::Power,
        &MlpHyper {
            epochs: 0,
            ..MlpHyper::default()
        },
    )
    .unwrap();
    assert_eq!(m.training_meta.epochs, 0);
    let ys: Vec<f64> = data.records.iter().map(|r| r.mean_power()).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let baseline = ys.iter().map(|y| (y - mean).abs()).sum::<f64>() / ys.len() as f64;
    let err = mae(&m, &data);
    assert!(
        err > 0.5 * baseline && err < 2.0 * baseline,
        "mae {err} vs baseline {baseline}"
    );
}

#[test]
fn training_is_deterministic() {
    let data = noise_free_plant();
    let mlp = MlpHyper {
        epochs: 20,
        ..MlpHyper::default()
    };
    assert_eq!(
        fit_mlp(data, Target::Power, &mlp).unwrap().params,
        fit_mlp(data, Target::Power, &mlp).unwrap().params
    );
    let other = fit_mlp(data, Target::Power, &MlpHyper { seed: 7, ..mlp }).unwrap();
    assert_ne!(
        other.params,
        fit_mlp(data, Target::Power, &mlp).unwrap().params
    );
    let lstm = LstmHyper {
        epochs: 2,
        ..LstmHyper::default()
    };
    assert_eq!(
        fit_lstm(data, Target::Thrust, &lstm).unwrap().params,
        fit_lstm(data, Target::Thrust, &lstm).unwrap().params
    );
}

#[test]
fn lstm_with_constant_output_predicts_the_constant() {
    let mut m = SurrogateModel::init_lstm(
        FinMaterial::Rigid,
        Target::Power,
        &LstmHyper::default(),
        Default::default(),
    );
    m.params.iter_mut().for_each(|p| *p = 0.0);
    let out = m.output_bias_index().unwrap();
    m.params[out] = 4.5;
    let g = GaitParams::new(1.25, 30.0, 20.0, 0.0);
    assert_eq!(predict_mean(&m, &g).unwrap(), 4.5);
    assert!(predict_series(&m, &g, 16)
        .unwrap()
        .iter()
        .all(|&y| y == 4.5));
}

#[test]
fn mlp_loss_decreases_over_windows() {
    let data = noise_free_plant();
    let m = fit_mlp(
        data,
        Target::Power,
        &MlpHyper {
            epochs: 300,
            ..MlpHyper::default()
        },
    )
    .unwrap();
    let windows: Vec<f64> = m
        .training_meta
        .loss_history
        .chunks(50)
        .map(|w| w.iter().sum::<f64>() / w.len() as f64)
        .collect();
    assert_eq!(windows.len(), 6);
    for w in windows.windows(2) {
        assert!(w[1] <= w[0], "{windows:?}");
    }
}

#[test]
fn lstm_on_noise_free_plant() {
    let data = noise_free_plant();
    let (train, holdout) = data.interior_split();
    let holdout = holdout.gaits();
    let lstm = fit_lstm(
        &train,
        Target::Power,
        &LstmHyper {
            epochs: 60,
            ..LstmHyper::default()
        },
    )
    .unwrap();
    let quartic = fit_polynomial(&train, Target::Power, 4).unwrap();
    let linear = fit_polynomial(&train, Target::Power, 1).unwrap();
    let report = evaluate(&lstm, data, &holdout).unwrap();
    let q = evaluate(&quartic, data, &holdout)
        .unwrap()
        .mean_absolute_error;
    let l = evaluate(&linear, data, &holdout)
        .unwrap()
        .mean_absolute_error;
    assert!(
        report.mean_absolute_error < q,
        "lstm {} vs quartic {q}",
        report.mean_absolute_error
    );
    assert!(report.mean_absolute_error < l);
    assert!(report.forward_passes_per_second >= 100.0);

    let (mut sq, mut amp, mut n) = (0.0, 0.0, 0usize);
    for r in train.records.iter().step_by(7) {
        let series = predict_series(&lstm, &r.gait, CYCLE_STEPS).unwrap();
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        assert!((mean - predict_mean(&lstm, &r.gait).unwrap()).abs() < 1e-9);

        let truth = Target::Power.series_of(r);
        let amplitude = truth.iter().cloned().fold(f64::MIN, f64::max)
            - truth.iter().cloned().fold(f64::MAX, f64::min);
        let rmse = (series
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / truth.len() as f64)
            .sqrt();
        sq += rmse * rmse;
        amp += amplitude;
        n += 1;
    }
    // pooled over gaits; near-static gaits have no amplitude to compare against
    let (rmse, amplitude) = ((sq / n as f64).sqrt(), amp / n as f64);
    assert!(
        rmse < 0.2 * amplitude,
        "rmse {rmse} vs mean amplitude {amplitude}"
    );

    for (f, pitch, spo) in [(1.0, 10.0, 0.0), (1.25, 20.0, -22.5), (0.75, 0.0, 45.0)] {
        let lo = predict_mean(&lstm, &GaitParams::new(f, 30.0, pitch, spo)).unwrap();
        let hi = predict_mean(&lstm, &GaitParams::new(f, 40.0, pitch, spo)).unwrap();
        assert!(
            hi >= lo,
            "power at stroke 40 ({hi}) below stroke 30 ({lo}) at f={f}"
        );
    }
}
