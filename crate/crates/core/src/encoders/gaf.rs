//! Gramian angular fields.
//!
//! The series is min-max rescaled into `[-1, 1]` and read as angles
//! `theta_i = arccos(v_i)`. The summation field holds `cos(theta_i + theta_j)`
//! and the difference field `sin(theta_i - theta_j)`. Both are evaluated
//! through the angle-addition identities using `cos(theta) = v` and
//! `sin(theta) = sqrt(1 - v^2)`, which is exact algebra and avoids
//! `N^2` trigonometric calls.

use ndarray::Array2;

use super::{check_series, EncodedImage, Method};
use crate::error::Result;

/// Ranges narrower than this are treated as a constant series.
const DEGENERATE_RANGE: f64 = 1e-12;

/// Angular (polar) form of a rescaled series.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarSeries {
    /// `arccos` of each rescaled sample, in `[0, pi]`.
    pub theta: Vec<f64>,
    /// Radius `i / N` for 1-based time index `i`. Not consumed by the fields.
    pub r: Vec<f64>,
}

/// Maps `min(v)` to -1 and `max(v)` to 1. A constant series maps to zeros.
pub fn rescale_minmax(v: &[f64]) -> Vec<f64> {
    let (min, max) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = max - min;
    if !(range >= DEGENERATE_RANGE) {
        return vec![0.0; v.len()];
    }
    v.iter()
        .map(|&x| (((x - max) + (x - min)) / range).clamp(-1.0, 1.0))
        .collect()
}

pub fn to_polar(rescaled: &[f64]) -> PolarSeries {
    let n = rescaled.len() as f64;
    PolarSeries {
        theta: rescaled.iter().map(|&x| x.clamp(-1.0, 1.0).acos()).collect(),
        r: (1..=rescaled.len()).map(|i| i as f64 / n).collect(),
    }
}

/// Returns `(cos theta_i, sin theta_i)` for the rescaled series.
fn angle_components(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let cos = rescale_minmax(v);
    let sin = cos.iter().map(|&c| ((1.0 - c) * (1.0 + c)).sqrt()).collect();
    (cos, sin)
}

/// Gramian angular summation field.
pub fn gasf_encode(v: &[f64]) -> Result<EncodedImage> {
    check_series(v, 1)?;
    let (c, s) = angle_components(v);
    let n = v.len();
    let pixels = Array2::from_shape_fn((n, n), |(i, j)| c[i] * c[j] - s[i] * s[j]);
    Ok(EncodedImage::new(pixels, Method::Gasf))
}

/// Gramian angular difference field.
pub fn gadf_encode(v: &[f64]) -> Result<EncodedImage> {
    check_series(v, 1)?;
    let (c, s) = angle_components(v);
    let n = v.len();
    let pixels = Array2::from_shape_fn((n, n), |(i, j)| s[i] * c[j] - c[i] * s[j]);
    Ok(EncodedImage::new(pixels, Method::Gadf))
}
