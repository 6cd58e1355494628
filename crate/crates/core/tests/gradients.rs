use finfom::dataio::FeatureBounds;
use finfom::domain::FinMaterial;
use finfom::surrogate::{
    check_gradients, check_gradients_at, GradBatch, LstmHyper, MlpHyper, SurrogateModel, Target,
};

fn mlp(seed: u64) -> SurrogateModel {
    let hyper = MlpHyper {
        seed,
        ..MlpHyper::default()
    };
    SurrogateModel::init_mlp(
        FinMaterial::Rigid,
        Target::Power,
        &hyper,
        FeatureBounds::default(),
    )
}

fn lstm(seed: u64) -> SurrogateModel {
    let hyper = LstmHyper {
        seed,
        ..LstmHyper::default()
    };
    SurrogateModel::init_lstm(
        FinMaterial::Rigid,
        Target::Thrust,
        &hyper,
        FeatureBounds::default(),
    )
}

#[test]
fn mlp_gradients_match_finite_differences() {
    for seed in 0..5 {
        let m = mlp(seed);
        let batch = GradBatch::random(&m, 8, seed + 100).unwrap();
        let r = check_gradients(&m, &batch, 100, seed).unwrap();
        assert_eq!(r.checked, 100);
        assert!(r.max_relative_error < 1e-4, "seed {seed}: {r:?}");
    }
}

#[test]
fn lstm_gradients_match_finite_differences() {
    for seed in 0..5 {
        let m = lstm(seed);
        let batch = GradBatch::random(&m, 2, seed + 100).unwrap();
        let r = check_gradients(&m, &batch, 100, seed).unwrap();
        assert!(r.max_relative_error < 1e-4, "seed {seed}: {r:?}");
    }
}

#[test]
fn bias_only_path_is_exact() {
    for m in [mlp(3), lstm(3)] {
        let batch = GradBatch::zeros(&m, 4).unwrap();
        let out = m.output_bias_index().unwrap();
        let r = check_gradients_at(&m, &batch, &[out]).unwrap();
        assert!(r.max_relative_error < 1e-7, "{r:?}");
    }
}

#[test]
fn polynomial_models_are_rejected() {
    let m = SurrogateModel {
        kind: finfom::surrogate::ModelKind::Linear,
        target: Target::Power,
        material: FinMaterial::Rigid,
        architecture: finfom::surrogate::Architecture::Polynomial { degree: 1 },
        normalization: FeatureBounds::default(),
        params: vec![0.0; 5],
        training_meta: Default::default(),
    };
    assert!(GradBatch::random(&m, 2, 0).is_err());
}
