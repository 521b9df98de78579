//! End-to-end evaluation: preprocessing, encoding, per-sensor training,
//! fusion and scoring over subject-level splits.
//!
//! Features depend only on the recording and the [`EncodingConfig`], so a
//! dataset is featurized once ([`prepare`]) and every fold trains on views
//! of the same table. Feature standardization, centroids and logistic
//! weights are fitted on the fold's training subjects only; validation
//! subjects are used only for early stopping and test subjects only for
//! scoring.

mod report;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::{
    pool_features, ClassifierConfig, FeatureVector, Model, PairPrediction, SensorModelPair,
    DEFAULT_POOL_FACTOR,
};
use crate::dataset::{fixed_subject_split, load_recording, loso_splits, Manifest, SplitPlan, SubjectRole};
use crate::encoders::{encode_stack, Method, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::label::{Letter, N_CLASSES};
use crate::signal::{preprocess, RawRecording, DEFAULT_LENGTH, DEFAULT_RATE_HZ};

pub use report::{config_text, emit_report, read_summary, SummaryRow};

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingConfig {
    pub method: Method,
    /// Quantile bins, used by MTF only.
    pub bins: usize,
    pub target_len: usize,
    pub target_hz: f64,
    pub pool_factor: usize,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            method: Method::Gadf,
            bins: DEFAULT_BINS,
            target_len: DEFAULT_LENGTH,
            target_hz: DEFAULT_RATE_HZ,
            pool_factor: DEFAULT_POOL_FACTOR,
        }
    }
}

impl EncodingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 bins, got {}", self.bins)));
        }
        if self.target_len < 2 {
            return Err(Error::InvalidArgument("target length must be at least 2".into()));
        }
        if !(self.target_hz.is_finite() && self.target_hz > 0.0) {
            return Err(Error::InvalidArgument("target rate must be positive".into()));
        }
        if self.pool_factor < 1 || self.pool_factor > self.target_len {
            return Err(Error::InvalidArgument(format!(
                "pooling factor must be in 1..={}, got {}",
                self.target_len, self.pool_factor
            )));
        }
        Ok(())
    }

    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("method".into(), self.method.to_string()),
            ("bins".into(), self.bins.to_string()),
            ("target_len".into(), self.target_len.to_string()),
            ("target_hz".into(), format!("{:?}", self.target_hz)),
            ("pool_factor".into(), self.pool_factor.to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub encoding: EncodingConfig,
    pub classifier: ClassifierConfig,
    pub val_fraction: f64,
    /// Seeds split shuffles and the label-permutation control.
    pub seed: u64,
    /// Upper bound on worker threads; 0 uses every logical CPU.
    pub workers: usize,
    /// Chance-level control: shuffle labels among training and validation
    /// recordings before fitting. Test labels are untouched.
    pub permute_train_labels: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            encoding: EncodingConfig::default(),
            classifier: ClassifierConfig::default(),
            val_fraction: 0.2,
            seed: 0,
            workers: 0,
            permute_train_labels: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoding.validate()?;
        self.classifier.validate()?;
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction must be in [0, 1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }

    /// Everything that influences results. The worker bound is left out
    /// because it never changes them.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = self.encoding.echo();
        out.extend(self.classifier.echo());
        out.push(("val_fraction".into(), format!("{:?}", self.val_fraction)));
        out.push(("split_seed".into(), self.seed.to_string()));
        out.push(("permute_train_labels".into(), self.permute_train_labels.to_string()));
        out
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
    }
}

/// Pooled accelerometer and gyroscope features of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedRecording {
    pub subject_id: String,
    pub label: Letter,
    pub repetition: u32,
    pub accel: FeatureVector,
    pub gyro: FeatureVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub records: Vec<PreparedRecording>,
}

/// Preprocesses, encodes and pools one recording.
pub fn featurize(rec: &RawRecording, enc: &EncodingConfig) -> Result<(FeatureVector, FeatureVector)> {
    let (accel, gyro) = preprocess(rec, enc.target_hz, enc.target_len)?;
    let a = pool_features(&encode_stack(&accel, enc.method, enc.bins)?, enc.pool_factor)?;
    let g = pool_features(&encode_stack(&gyro, enc.method, enc.bins)?, enc.pool_factor)?;
    Ok((a, g))
}

/// Featurizes every manifest entry whose subject passes `keep`, in manifest
/// order.
pub fn prepare(
    manifest: &Manifest,
    enc: &EncodingConfig,
    workers: usize,
    keep: impl Fn(&str) -> bool + Sync,
) -> Result<PreparedDataset> {
    enc.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let entries: Vec<_> = manifest.entries.iter().filter(|e| keep(&e.subject_id)).collect();
    let records = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let rec = load_recording(manifest, entry)?;
                let (accel, gyro) = featurize(&rec, enc)?;
                Ok(PreparedRecording {
                    subject_id: entry.subject_id.clone(),
                    label: entry.label,
                    repetition: entry.repetition,
                    accel,
                    gyro,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(PreparedDataset { records })
}

/// Per-recording outcome on a test subject.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordLog {
    pub subject_id: String,
    pub repetition: u32,
    pub truth: Letter,
    pub prediction: PairPrediction,
}

impl RecordLog {
    pub fn predicted(&self) -> Letter {
        self.prediction.label()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold_id: String,
    pub records: Vec<RecordLog>,
    pub accuracy_accel: f64,
    pub accuracy_gyro: f64,
    pub accuracy_fused: f64,
}

impl FoldResult {
    fn from_records(fold_id: String, records: Vec<RecordLog>) -> Self {
        let n = records.len() as f64;
        let acc = |pick: fn(&PairPrediction) -> Letter| {
            records.iter().filter(|r| pick(&r.prediction) == r.truth).count() as f64 / n
        };
        let accuracy_accel = acc(|p| crate::classifier::predict_label(&p.accel));
        let accuracy_gyro = acc(|p| crate::classifier::predict_label(&p.gyro));
        let accuracy_fused = acc(|p| p.label());
        FoldResult {
            fold_id,
            records,
            accuracy_accel,
            accuracy_gyro,
            accuracy_fused,
        }
    }
}

type Examples<'a> = Vec<(&'a FeatureVector, Letter)>;

fn examples<'a>(rows: &[&'a PreparedRecording], labels: &[Letter], accel: bool) -> Examples<'a> {
    rows.iter()
        .zip(labels)
        .map(|(r, &l)| (if accel { &r.accel } else { &r.gyro }, l))
        .collect()
}

fn stream_for(fold_id: &str) -> u64 {
    // FNV-1a; stable across platforms and releases.
    fold_id
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Trains both sensor models on the plan's training subjects, using the
/// validation subjects for early stopping.
pub fn train_pair(plan: &SplitPlan, data: &PreparedDataset, config: &EvalConfig) -> Result<SensorModelPair> {
    let mut train: Vec<&PreparedRecording> = Vec::new();
    let mut val: Vec<&PreparedRecording> = Vec::new();
    for r in &data.records {
        match plan.role_of(&r.subject_id) {
            Some(SubjectRole::Train) => train.push(r),
            Some(SubjectRole::Validation) => val.push(r),
            _ => {}
        }
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training recordings".into()));
    }

    let mut labels: Vec<Letter> = train.iter().chain(&val).map(|r| r.label).collect();
    if config.permute_train_labels {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream_for(&plan.fold_id));
        labels.shuffle(&mut rng);
    }
    let (train_labels, val_labels) = labels.split_at(train.len());

    let accel = Model::fit(
        &config.classifier,
        &examples(&train, train_labels, true),
        &examples(&val, val_labels, true),
    )?;
    let gyro = Model::fit(
        &config.classifier,
        &examples(&train, train_labels, false),
        &examples(&val, val_labels, false),
    )?;
    Ok(SensorModelPair { accel, gyro })
}

/// Runs one fold on an already featurized dataset.
pub fn run_fold_prepared(plan: &SplitPlan, data: &PreparedDataset, config: &EvalConfig) -> Result<FoldResult> {
    let wrap = |e: Error| Error::Fold {
        fold_id: plan.fold_id.clone(),
        source: Box::new(e),
    };
    let test: Vec<&PreparedRecording> = data
        .records
        .iter()
        .filter(|r| plan.role_of(&r.subject_id) == Some(SubjectRole::Test))
        .collect();
    if test.is_empty() {
        return Err(wrap(Error::InvalidArgument("empty test set".into())));
    }
    for r in &test {
        assert!(
            !plan.train_subjects.contains(&r.subject_id) && !plan.val_subjects.contains(&r.subject_id),
            "subject {} leaks into training",
            r.subject_id
        );
    }

    let pair = train_pair(plan, data, config).map_err(wrap)?;
    let records = test
        .iter()
        .map(|r| {
            Ok(RecordLog {
                subject_id: r.subject_id.clone(),
                repetition: r.repetition,
                truth: r.label,
                prediction: pair.predict_features(&r.accel, &r.gyro)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;
    Ok(FoldResult::from_records(plan.fold_id.clone(), records))
}

/// Loads, featurizes and evaluates the subjects named by `plan`.
pub fn run_fold(plan: &SplitPlan, config: &EvalConfig, manifest: &Manifest) -> Result<FoldResult> {
    config.validate()?;
    plan.validate(manifest)?;
    let data = prepare(manifest, &config.encoding, config.workers, |s| plan.role_of(s).is_some())?;
    run_fold_prepared(plan, &data, config)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FoldOutcome {
    Completed(FoldResult),
    Failed { fold_id: String, message: String },
}

impl FoldOutcome {
    pub fn fold_id(&self) -> &str {
        match self {
            FoldOutcome::Completed(r) => &r.fold_id,
            FoldOutcome::Failed { fold_id, .. } => fold_id,
        }
    }

    pub fn result(&self) -> Option<&FoldResult> {
        match self {
            FoldOutcome::Completed(r) => Some(r),
            FoldOutcome::Failed { .. } => None,
        }
    }
}

/// `counts[i][j]`: test recordings of letter `i` predicted as letter `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N_CLASSES]; N_CLASSES],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Rows scaled to sum to one; empty rows stay zero.
    pub fn normalized(&self) -> [[f64; N_CLASSES]; N_CLASSES] {
        self.counts.map(|row| {
            let total: u64 = row.iter().sum();
            row.map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// Sorted by fold id.
    pub folds: Vec<FoldOutcome>,
    /// Unweighted mean over completed folds.
    pub mean_accel: f64,
    pub mean_gyro: f64,
    pub mean_fused: f64,
    /// Sample standard deviation of per-fold fused accuracy (0 for one fold).
    pub std_fused: f64,
    /// Fused accuracy pooled over all test recordings.
    pub weighted_fused: f64,
    pub confusion: ConfusionMatrix,
    pub config: Vec<(String, String)>,
}

impl EvaluationReport {
    pub fn completed(&self) -> impl Iterator<Item = &FoldResult> {
        self.folds.iter().filter_map(FoldOutcome::result)
    }

    pub fn n_test(&self) -> usize {
        self.completed().map(|f| f.records.len()).sum()
    }
}

/// Confusion counts over every completed fold's test recordings.
pub fn confusion(folds: &[FoldOutcome]) -> ConfusionMatrix {
    let mut counts = [[0u64; N_CLASSES]; N_CLASSES];
    for r in folds.iter().filter_map(FoldOutcome::result).flat_map(|f| &f.records) {
        counts[r.truth.index()][r.predicted().index()] += 1;
    }
    ConfusionMatrix { counts }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn assemble(mut folds: Vec<FoldOutcome>, config: Vec<(String, String)>) -> EvaluationReport {
    folds.sort_by(|a, b| a.fold_id().cmp(b.fold_id()));
    let done: Vec<&FoldResult> = folds.iter().filter_map(FoldOutcome::result).collect();
    let fused: Vec<f64> = done.iter().map(|f| f.accuracy_fused).collect();
    let mean_fused = mean(&fused);
    let std_fused = if fused.len() > 1 {
        (fused.iter().map(|a| (a - mean_fused).powi(2)).sum::<f64>() / (fused.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let n_test: usize = done.iter().map(|f| f.records.len()).sum();
    let correct: usize = done
        .iter()
        .flat_map(|f| &f.records)
        .filter(|r| r.predicted() == r.truth)
        .count();
    EvaluationReport {
        mean_accel: mean(&done.iter().map(|f| f.accuracy_accel).collect::<Vec<_>>()),
        mean_gyro: mean(&done.iter().map(|f| f.accuracy_gyro).collect::<Vec<_>>()),
        mean_fused,
        std_fused,
        weighted_fused: correct as f64 / n_test as f64,
        confusion: confusion(&folds),
        folds,
        config,
    }
}

/// Runs every plan against one featurized dataset. Failed folds are
/// recorded in the report rather than aborting the run.
pub fn evaluate_plans(
    plans: &[SplitPlan],
    data: &PreparedDataset,
    config: &EvalConfig,
    mut echo: Vec<(String, String)>,
) -> Result<EvaluationReport> {
    config.validate()?;
    let pool = config.thread_pool()?;
    let folds: Vec<FoldOutcome> = pool.install(|| {
        plans
            .par_iter()
            .map(|plan| {
                let outcome = match run_fold_prepared(plan, data, config) {
                    Ok(r) => FoldOutcome::Completed(r),
                    Err(e) => FoldOutcome::Failed {
                        fold_id: plan.fold_id.clone(),
                        message: e.to_string(),
                    },
                };
                match &outcome {
                    FoldOutcome::Completed(r) => log::info!(
                        "fold {}: accel {:.4} gyro {:.4} fused {:.4} ({} test)",
                        r.fold_id,
                        r.accuracy_accel,
                        r.accuracy_gyro,
                        r.accuracy_fused,
                        r.records.len()
                    ),
                    FoldOutcome::Failed { fold_id, message } => log::warn!("fold {fold_id} failed: {message}"),
                }
                outcome
            })
            .collect()
    });
    echo.extend(config.echo());
    Ok(assemble(folds, echo))
}

fn dataset_echo(manifest: &Manifest, protocol: &str) -> Vec<(String, String)> {
    vec![
        ("dataset".into(), manifest.dataset_name.clone()),
        ("recordings".into(), manifest.len().to_string()),
        ("subjects".into(), manifest.subjects().len().to_string()),
        ("protocol".into(), protocol.into()),
    ]
}

/// Leave-one-subject-out evaluation over the whole manifest.
pub fn loso_evaluate(manifest: &Manifest, config: &EvalConfig) -> Result<EvaluationReport> {
    config.validate()?;
    let plans = loso_splits(manifest, config.val_fraction, config.seed)?;
    log::info!("featurizing {} recordings", manifest.len());
    let data = prepare(manifest, &config.encoding, config.workers, |_| true)?;
    evaluate_plans(&plans, &data, config, dataset_echo(manifest, "loso"))
}

/// Single fixed split: `n_train_subjects` for train+validation, the rest
/// for test.
pub fn fixed_evaluate(manifest: &Manifest, n_train_subjects: usize, config: &EvalConfig) -> Result<EvaluationReport> {
    config.validate()?;
    let plan = fixed_subject_split(manifest, n_train_subjects, config.val_fraction, config.seed)?;
    log::info!("featurizing {} recordings", manifest.len());
    let data = prepare(manifest, &config.encoding, config.workers, |_| true)?;
    let mut echo = dataset_echo(manifest, "fixed");
    echo.push(("train_subjects".into(), n_train_subjects.to_string()));
    evaluate_plans(&[plan], &data, config, echo)
}

/// Subject sets of a plan, for logging and split files.
pub fn plan_roles(plan: &SplitPlan) -> Vec<(&'static str, &BTreeSet<String>)> {
    vec![
        ("train", &plan.train_subjects),
        ("val", &plan.val_subjects),
        ("test", &plan.test_subjects),
    ]
}
