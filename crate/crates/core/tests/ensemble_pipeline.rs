use geocoherence::ensemble::{
    load_model, save_model, train_ensemble_with, Algorithm, EnsembleConfig, TrainingData,
};
use geocoherence::evaluation::{cross_validate_matrix, stratified_folds};
use geocoherence::exec::Execution;
use geocoherence::features::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three well separated blobs in 4 dimensions, 100 rows each.
fn blobs(seed: u64) -> (Vec<f64>, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..300 {
        let c = (i % 3) as u32;
        for f in 0..4 {
            let centre = if f == 0 { c as f64 * 10.0 } else { 0.0 };
            x.push(centre + rng.random_range(-1.0..1.0));
        }
        y.push(c);
    }
    (x, y)
}

fn matrix(x: &[f64], y: &[u32]) -> FeatureMatrix {
    let cols = (0..4).map(|j| format!("f{j}")).collect();
    let labels = y.iter().map(|c| format!("class{c}")).collect();
    FeatureMatrix::from_parts(cols, x.to_vec(), labels).unwrap()
}

#[test]
fn separable_classes_cross_validate_perfectly() {
    let (x, y) = blobs(3);
    let m = matrix(&x, &y);
    for alg in Algorithm::ALL {
        let cfg = EnsembleConfig::new(alg).with_estimators(25).with_seed(4);
        let out = cross_validate_matrix(&m, &cfg, 5, 4, Execution::default()).unwrap();
        assert!(out.metrics.accuracy >= 0.99, "{alg}: {}", out.metrics.accuracy);
        assert_eq!(out.confusion.total(), 300);
    }
}

#[test]
fn training_is_independent_of_execution_mode() {
    let (x, y) = blobs(8);
    let data = TrainingData::new(&x, 4, &y, 3);
    for alg in Algorithm::ALL {
        let cfg = EnsembleConfig::new(alg).with_estimators(12).with_seed(21);
        let a = train_ensemble_with(&data, &cfg, Execution::Sequential).unwrap();
        let b = train_ensemble_with(&data, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn saved_model_predicts_identically() {
    let (x, y) = blobs(11);
    let data = TrainingData::new(&x, 4, &y, 3);
    let model = train_ensemble_with(&data, &EnsembleConfig::new(Algorithm::ExtraTrees).with_estimators(15), Execution::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&model, std::fs::File::create(&path).unwrap()).unwrap();
    let loaded = load_model(std::fs::File::open(&path).unwrap()).unwrap();
    let probe: Vec<f64> = (0..400).map(|i| (i as f64 * 0.37).sin() * 15.0).collect();
    for row in probe.chunks(4) {
        assert_eq!(model.predict_proba(row).unwrap(), loaded.predict_proba(row).unwrap());
    }
}

#[test]
fn pooled_confusion_covers_every_row_once() {
    let (x, y) = blobs(1);
    let m = matrix(&x, &y);
    let cfg = EnsembleConfig::new(Algorithm::RandomForest).with_estimators(5);
    let out = cross_validate_matrix(&m, &cfg, 10, 2, Execution::default()).unwrap();
    let folds = stratified_folds(&y, 10, 2).unwrap();
    let mut seen = vec![0; y.len()];
    for f in 0..10 {
        for r in folds.test_rows(f) {
            seen[r] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1));
    let support: u64 = (0..3).map(|c| out.confusion.support(c)).sum();
    assert_eq!(support, 300);
}
