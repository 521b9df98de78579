use airwrite::classifier::{ClassifierConfig, DEFAULT_TEMPERATURE};
use airwrite::dataset::{generate_synthetic, load_manifest, loso_splits, SyntheticSpec};
use airwrite::evaluation::{loso_evaluate, run_fold, EncodingConfig, EvalConfig};

fn centroid(pool_factor: usize) -> EvalConfig {
    EvalConfig {
        encoding: EncodingConfig { pool_factor, ..EncodingConfig::default() },
        classifier: ClassifierConfig::Centroid { temperature: DEFAULT_TEMPERATURE },
        ..EvalConfig::default()
    }
}

#[test]
fn noise_free_synthetic_data_is_classified_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        n_subjects: 4,
        n_repetitions: 2,
        noise_scale: 0.0,
        subject_jitter: 0.0,
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec, dir.path()).unwrap();
    let manifest = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    let plans = loso_splits(&manifest, 0.0, 1).unwrap();
    let result = run_fold(&plans[2], &centroid(5), &manifest).unwrap();
    assert_eq!(result.records.len(), 52);
    assert_eq!(result.accuracy_fused, 1.0);
}

#[test]
fn report_is_consistent_with_its_folds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec { n_subjects: 5, n_repetitions: 2, ..SyntheticSpec::default() };
    generate_synthetic(&spec, dir.path()).unwrap();
    let manifest = load_manifest(&dir.path().join("manifest.csv")).unwrap();
    let report = loso_evaluate(&manifest, &centroid(31)).unwrap();
    assert_eq!(report.folds.len(), 5);

    let folds: Vec<_> = report.completed().collect();
    let mean = folds.iter().map(|f| f.accuracy_fused).sum::<f64>() / folds.len() as f64;
    assert!((report.mean_fused - mean).abs() <= 1e-12);

    // Confusion rows sum to the per-letter test counts.
    let mut per_letter = [0u64; 26];
    for r in folds.iter().flat_map(|f| &f.records) {
        per_letter[r.truth.index()] += 1;
        for acc in [r.prediction.accel, r.prediction.gyro, r.prediction.fused] {
            assert!((acc.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
    for (row, n) in report.confusion.counts.iter().zip(per_letter) {
        assert_eq!(row.iter().sum::<u64>(), n);
    }
    assert_eq!(report.confusion.total() as usize, report.n_test());
    for f in &folds {
        for acc in [f.accuracy_accel, f.accuracy_gyro, f.accuracy_fused] {
            assert!((0.0..=1.0).contains(&acc));
        }
    }
}
