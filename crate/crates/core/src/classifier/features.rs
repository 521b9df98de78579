use ndarray::{Array1, ArrayView1, Axis};

use crate::encoders::ImageStack;
use crate::error::{Error, Result};

/// Default pooling window; 155 splits into 31 windows of 5.
pub const DEFAULT_POOL_FACTOR: usize = 5;

/// Flattened, average-pooled image stack.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub x: Vec<f64>,
    /// Side of the square pooling window that produced `x`.
    pub pool_factor: usize,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Feature dimension for an `n x n` three-channel stack.
pub fn pooled_dim(n: usize, factor: usize) -> usize {
    let cells = n.div_ceil(factor);
    3 * cells * cells
}

/// Non-overlapping `factor x factor` mean pooling per channel. Edge windows
/// are truncated. Output order is channel, then window row, then window
/// column.
pub fn pool_features(stack: &ImageStack, factor: usize) -> Result<FeatureVector> {
    let n = stack.size();
    if factor < 1 || factor > n {
        return Err(Error::InvalidArgument(format!(
            "pooling factor must be in 1..={n}, got {factor}"
        )));
    }
    let cells = n.div_ceil(factor);
    let mut x = Vec::with_capacity(pooled_dim(n, factor));
    for channel in stack.as_array().axis_iter(Axis(0)) {
        for bi in 0..cells {
            let rows = bi * factor..((bi + 1) * factor).min(n);
            for bj in 0..cells {
                let cols = bj * factor..((bj + 1) * factor).min(n);
                let window = channel.slice(ndarray::s![rows.clone(), cols]);
                x.push(window.sum() / window.len() as f64);
            }
        }
    }
    Ok(FeatureVector { x, pool_factor: factor })
}

/// Per-feature affine standardization fitted on training data. Features
/// with (population) spread below 1e-12 are only centred.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]> + Clone, dim: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = Array1::<f64>::zeros(dim);
        for r in rows.clone() {
            mean += &ArrayView1::from(r);
        }
        mean /= n;
        let mut var = Array1::<f64>::zeros(dim);
        for r in rows {
            for ((v, &x), &m) in var.iter_mut().zip(r).zip(mean.iter()) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var.mapv(|v| {
            let s = (v / n).sqrt();
            if s < 1e-12 {
                1.0
            } else {
                s
            }
        });
        Standardizer { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Array1<f64> {
        (&ArrayView1::from(x) - &self.mean) / &self.scale
    }
}
