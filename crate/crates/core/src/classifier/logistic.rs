//! Multinomial logistic regression.
//!
//! Objective: mean cross-entropy of the softmax over `W z + b` plus
//! `l2 / 2 * ||W||^2` (the bias is not penalized), where `z` is the
//! standardized feature vector. Training is full-batch gradient descent. A
//! step that would raise the training loss is rejected and retried at half
//! the step size, so the recorded training loss never increases. Training
//! ends after `max_epochs`, when the validation loss has not improved for
//! `patience` consecutive epochs, or when the step size collapses; the
//! parameters with the lowest validation loss are kept.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ClassProbabilities, FeatureVector, Standardizer};
use crate::error::{Error, Result};
use crate::label::{Letter, N_CLASSES};

/// Backtracking gives up below this step size.
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub step_size: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Standard deviation of the initial weights; zero starts from all-zero
    /// weights and ignores `seed`.
    pub init_scale: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            step_size: 0.1,
            l2: 1e-4,
            max_epochs: 2000,
            patience: 10,
            seed: 0,
            init_scale: 0.0,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return bad("step size must be positive");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 strength must be non-negative");
        }
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return bad("init scale must be non-negative");
        }
        Ok(())
    }

    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("step_size".into(), format!("{:?}", self.step_size)),
            ("l2".into(), format!("{:?}", self.l2)),
            ("max_epochs".into(), self.max_epochs.to_string()),
            ("patience".into(), self.patience.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("init_scale".into(), format!("{:?}", self.init_scale)),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStopped,
    Converged,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MaxEpochs => "max_epochs",
            StopReason::EarlyStopped => "early_stopped",
            StopReason::Converged => "converged",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [StopReason::MaxEpochs, StopReason::EarlyStopped, StopReason::Converged]
            .into_iter()
            .find(|r| r.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    /// Training loss before the first step and after every epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss at the same points; empty without validation data.
    pub val_loss: Vec<f64>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stop: StopReason,
}

impl TrainingSummary {
    pub fn epochs(&self) -> usize {
        self.train_loss.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    /// `26 x D`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub standardizer: Standardizer,
    pub config: LogisticConfig,
    pub pool_factor: usize,
    pub summary: TrainingSummary,
}

impl LogisticModel {
    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub(crate) fn predict(&self, x: &[f64]) -> ClassProbabilities {
        let z = self.standardizer.apply(x);
        let logits = self.weights.dot(&z) + &self.bias;
        let mut arr = [0.0; N_CLASSES];
        arr.copy_from_slice(logits.as_slice().expect("contiguous"));
        ClassProbabilities::softmax(&arr)
    }
}

/// Row-wise softmax probabilities and the mean negative log-likelihood.
fn forward(
    weights: ArrayView2<'_, f64>,
    bias: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
) -> (f64, Array2<f64>) {
    let mut probs = x.dot(&weights.t());
    probs += &bias;
    let mut nll = 0.0;
    for (mut row, &y) in probs.axis_iter_mut(Axis(0)).zip(labels) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        nll -= (row[y] / total).ln();
        row /= total;
    }
    (nll / labels.len().max(1) as f64, probs)
}

fn penalty(weights: ArrayView2<'_, f64>, l2: f64) -> f64 {
    0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

fn gradient(
    weights: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    mut probs: Array2<f64>,
    l2: f64,
) -> (Array2<f64>, Array1<f64>) {
    let n = labels.len().max(1) as f64;
    for (mut row, &y) in probs.axis_iter_mut(Axis(0)).zip(labels) {
        row[y] -= 1.0;
    }
    let mut gw = probs.t().dot(&x);
    gw /= n;
    gw.scaled_add(l2, &weights);
    let gb = probs.sum_axis(Axis(0)) / n;
    (gw, gb)
}

/// Regularized mean cross-entropy. `labels` are class indices.
pub fn cross_entropy(
    weights: ArrayView2<'_, f64>,
    bias: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    l2: f64,
) -> f64 {
    forward(weights, bias, x, labels).0 + penalty(weights, l2)
}

/// Loss and its analytic gradient with respect to weights and bias.
pub fn cross_entropy_gradient(
    weights: ArrayView2<'_, f64>,
    bias: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    l2: f64,
) -> (f64, Array2<f64>, Array1<f64>) {
    let (nll, probs) = forward(weights, bias, x, labels);
    let (gw, gb) = gradient(weights, x, labels, probs, l2);
    (nll + penalty(weights, l2), gw, gb)
}

fn design_matrix(data: &[(&FeatureVector, Letter)], st: &Standardizer) -> Result<(Array2<f64>, Vec<usize>)> {
    let dim = st.dim();
    let mut x = Array2::zeros((data.len(), dim));
    for (mut row, (fv, _)) in x.axis_iter_mut(Axis(0)).zip(data) {
        if fv.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: fv.dim() });
        }
        row.assign(&st.apply(&fv.x));
    }
    Ok((x, data.iter().map(|(_, l)| l.index()).collect()))
}

pub fn fit_logistic(
    train: &[(&FeatureVector, Letter)],
    val: &[(&FeatureVector, Letter)],
    config: &LogisticConfig,
) -> Result<LogisticModel> {
    config.validate()?;
    let Some((first, _)) = train.first() else {
        return Err(Error::InvalidArgument("no training examples".into()));
    };
    let dim = first.dim();
    let pool_factor = first.pool_factor;
    let standardizer = Standardizer::fit(train.iter().map(|(fv, _)| fv.x.as_slice()), dim);
    let (x, y) = design_matrix(train, &standardizer)?;
    let (xv, yv) = design_matrix(val, &standardizer)?;
    let has_val = !val.is_empty();
    let l2 = config.l2;

    let mut weights = if config.init_scale > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        Array2::from_shape_simple_fn((N_CLASSES, dim), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            config.init_scale * z
        })
    } else {
        Array2::zeros((N_CLASSES, dim))
    };
    let mut bias = Array1::zeros(N_CLASSES);

    let val_loss = |w: &Array2<f64>, b: &Array1<f64>| cross_entropy(w.view(), b.view(), xv.view(), &yv, l2);

    let (nll, mut probs) = forward(weights.view(), bias.view(), x.view(), &y);
    let mut loss = nll + penalty(weights.view(), l2);
    if !loss.is_finite() {
        return Err(Error::Diverged { epoch: 0 });
    }
    let mut summary = TrainingSummary {
        train_loss: vec![loss],
        val_loss: Vec::new(),
        best_epoch: 0,
        stop: StopReason::MaxEpochs,
    };
    let mut best = (weights.clone(), bias.clone());
    let mut best_val = f64::INFINITY;
    if has_val {
        best_val = val_loss(&weights, &bias);
        summary.val_loss.push(best_val);
    }

    let mut step = config.step_size;
    let mut stale = 0usize;
    'epochs: for epoch in 1..=config.max_epochs {
        let (gw, gb) = gradient(weights.view(), x.view(), &y, probs, l2);
        if gw.iter().chain(gb.iter()).any(|g| !g.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        let gmax = gw.iter().chain(gb.iter()).fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < 1e-12 {
            summary.stop = StopReason::Converged;
            break;
        }
        loop {
            let mut cw = weights.clone();
            cw.scaled_add(-step, &gw);
            let mut cb = bias.clone();
            cb.scaled_add(-step, &gb);
            let (cnll, cprobs) = forward(cw.view(), cb.view(), x.view(), &y);
            let closs = cnll + penalty(cw.view(), l2);
            if closs.is_finite() && closs <= loss {
                weights = cw;
                bias = cb;
                probs = cprobs;
                loss = closs;
                break;
            }
            step *= 0.5;
            if step < MIN_STEP {
                summary.stop = StopReason::Converged;
                break 'epochs;
            }
        }
        summary.train_loss.push(loss);

        if has_val {
            let vl = val_loss(&weights, &bias);
            summary.val_loss.push(vl);
            if vl < best_val {
                best_val = vl;
                best = (weights.clone(), bias.clone());
                summary.best_epoch = epoch;
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.patience {
                    summary.stop = StopReason::EarlyStopped;
                    break;
                }
            }
        }
    }

    if has_val {
        (weights, bias) = best;
    } else {
        summary.best_epoch = summary.epochs();
    }
    log::debug!(
        "logistic: {} epochs, stop={}, best epoch {}, train loss {:.6}",
        summary.epochs(),
        summary.stop.name(),
        summary.best_epoch,
        summary.train_loss.last().copied().unwrap_or(f64::NAN)
    );
    Ok(LogisticModel {
        weights,
        bias,
        standardizer,
        config: config.clone(),
        pool_factor,
        summary,
    })
}
