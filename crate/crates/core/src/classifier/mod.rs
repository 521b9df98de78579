//! Per-sensor classifiers over pooled image features and the
//! accelerometer/gyroscope posterior fusion.
//!
//! Two model kinds sit behind [`Model`]: a nearest-centroid softmax and
//! multinomial logistic regression trained by full-batch gradient descent on
//! the L2-regularized cross-entropy. Both standardize features with
//! training-set statistics.

mod centroid;
mod features;
mod logistic;
mod model_io;

use std::ops::Index;

use crate::encoders::ImageStack;
use crate::error::{Error, Result};
use crate::label::{Letter, N_CLASSES};

pub use centroid::{fit_centroid, CentroidModel, DEFAULT_TEMPERATURE};
pub use features::{pool_features, pooled_dim, FeatureVector, Standardizer, DEFAULT_POOL_FACTOR};
pub use logistic::{
    cross_entropy, cross_entropy_gradient, fit_logistic, LogisticConfig, LogisticModel, StopReason,
    TrainingSummary,
};
pub use model_io::{load_model, read_model, save_model, write_model};

/// Tolerance on the probability total.
const SIMPLEX_TOL: f64 = 1e-9;

/// A probability vector over the letters A..Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassProbabilities([f64; N_CLASSES]);

impl ClassProbabilities {
    pub fn new(p: [f64; N_CLASSES]) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!("probabilities sum to {total}, not 1")));
        }
        Ok(ClassProbabilities(p))
    }

    pub fn uniform() -> Self {
        ClassProbabilities([1.0 / N_CLASSES as f64; N_CLASSES])
    }

    pub fn one_hot(letter: Letter) -> Self {
        let mut p = [0.0; N_CLASSES];
        p[letter.index()] = 1.0;
        ClassProbabilities(p)
    }

    /// Numerically stable softmax.
    pub fn softmax(logits: &[f64; N_CLASSES]) -> Self {
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p = logits.map(|z| (z - max).exp());
        let total: f64 = p.iter().sum();
        for v in &mut p {
            *v /= total;
        }
        ClassProbabilities(p)
    }

    pub fn as_array(&self) -> &[f64; N_CLASSES] {
        &self.0
    }
}

impl Index<Letter> for ClassProbabilities {
    type Output = f64;

    fn index(&self, l: Letter) -> &f64 {
        &self.0[l.index()]
    }
}

/// Elementwise mean of the two sensor posteriors.
pub fn fuse(accel: &ClassProbabilities, gyro: &ClassProbabilities) -> ClassProbabilities {
    let mut p = [0.0; N_CLASSES];
    for (out, (a, g)) in p.iter_mut().zip(accel.0.iter().zip(&gyro.0)) {
        *out = (a + g) / 2.0;
    }
    ClassProbabilities(p)
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Most probable letter; ties go to the earlier letter.
pub fn predict_label(p: &ClassProbabilities) -> Letter {
    Letter::from_index(argmax(&p.0)).expect("26 entries")
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierConfig {
    Centroid { temperature: f64 },
    Logistic(LogisticConfig),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Logistic(LogisticConfig::default())
    }
}

impl ClassifierConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierConfig::Centroid { .. } => "centroid",
            ClassifierConfig::Logistic(_) => "logistic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierConfig::Centroid { temperature } => {
                if !(temperature.is_finite() && *temperature > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "temperature must be positive, got {temperature}"
                    )));
                }
                Ok(())
            }
            ClassifierConfig::Logistic(c) => c.validate(),
        }
    }

    /// Flat `key=value` description.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![("classifier".to_string(), self.kind().to_string())];
        match self {
            ClassifierConfig::Centroid { temperature } => {
                out.push(("temperature".into(), format!("{temperature:?}")));
            }
            ClassifierConfig::Logistic(c) => out.extend(c.echo()),
        }
        out
    }
}

/// A trained per-sensor classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Centroid(CentroidModel),
    Logistic(LogisticModel),
}

impl Model {
    /// Trains the configured model kind. `val` is only used for early
    /// stopping and may be empty.
    pub fn fit(
        config: &ClassifierConfig,
        train: &[(&FeatureVector, Letter)],
        val: &[(&FeatureVector, Letter)],
    ) -> Result<Model> {
        config.validate()?;
        match config {
            ClassifierConfig::Centroid { temperature } => {
                fit_centroid(train, *temperature).map(Model::Centroid)
            }
            ClassifierConfig::Logistic(c) => fit_logistic(train, val, c).map(Model::Logistic),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Centroid(m) => m.dim(),
            Model::Logistic(m) => m.dim(),
        }
    }

    pub fn pool_factor(&self) -> usize {
        match self {
            Model::Centroid(m) => m.pool_factor,
            Model::Logistic(m) => m.pool_factor,
        }
    }

    pub fn predict_features(&self, fv: &FeatureVector) -> Result<ClassProbabilities> {
        if fv.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: fv.dim(),
            });
        }
        Ok(match self {
            Model::Centroid(m) => m.predict(&fv.x),
            Model::Logistic(m) => m.predict(&fv.x),
        })
    }

    /// Pools `stack` with the model's factor and predicts.
    pub fn predict_proba(&self, stack: &ImageStack) -> Result<ClassProbabilities> {
        let factor = self.pool_factor();
        if factor > stack.size() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: pooled_dim(stack.size(), stack.size()),
            });
        }
        self.predict_features(&pool_features(stack, factor)?)
    }
}

/// Independently trained accelerometer and gyroscope models.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModelPair {
    pub accel: Model,
    pub gyro: Model,
}

/// Posteriors of one recording under a [`SensorModelPair`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPrediction {
    pub accel: ClassProbabilities,
    pub gyro: ClassProbabilities,
    pub fused: ClassProbabilities,
}

impl PairPrediction {
    pub fn label(&self) -> Letter {
        predict_label(&self.fused)
    }
}

impl SensorModelPair {
    pub fn predict_features(&self, accel: &FeatureVector, gyro: &FeatureVector) -> Result<PairPrediction> {
        let a = self.accel.predict_features(accel)?;
        let g = self.gyro.predict_features(gyro)?;
        Ok(PairPrediction {
            accel: a,
            gyro: g,
            fused: fuse(&a, &g),
        })
    }

    pub fn predict(&self, accel: &ImageStack, gyro: &ImageStack) -> Result<PairPrediction> {
        let a = self.accel.predict_proba(accel)?;
        let g = self.gyro.predict_proba(gyro)?;
        Ok(PairPrediction {
            accel: a,
            gyro: g,
            fused: fuse(&a, &g),
        })
    }
}
